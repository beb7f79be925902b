"""
sr command - accelerated (or dense) super-resolution of one LR image
"""
import argparse
from pathlib import Path

from api.commands import arguments
from config.settings import AppSettings
from core.image_io import load_image, save_image
from models.model_spec import RunConfig
from services.sr_pipeline import super_resolve
from utils.helpers import Utils

def register(subparsers):
    parser = subparsers.add_parser("sr", help="super-resolve an LR image")
    parser.add_argument("input", help="LR image (P6/P5)")
    arguments.add_model_options(parser)
    parser.add_argument("--dense", action="store_true", help="bypass pruning (oracle mode)")
    arguments.add_mask_options(parser)
    parser.add_argument("--sigma", type=arguments.sigma_value, default=AppSettings.DEFAULT_SIGMA,
                        help="window pruning threshold for Transformer bodies")
    parser.add_argument("--neighbor-policy", choices=["masked", "dense"], default="masked",
                        help="whether pruned neighbors read as zero inside kept CNN columns")
    parser.add_argument("--measure-gap", action="store_true",
                        help="also measure the train/infer gap at pruned windows")
    parser.add_argument("-o", "--output", required=True, help="SR image path (P6)")
    parser.add_argument("--report", help="optional per-layer FLOPs CSV path")
    parser.set_defaults(handler=handle)

def handle(args: argparse.Namespace) -> int:
    model = Utils.load_model(args.model, args.weights)
    cfg = RunConfig(
        dilation_k=args.dilate,
        sigma=args.sigma,
        mask_strategy=args.strategy,
        mode="dense" if args.dense else "accelerated",
        neighbor_policy=args.neighbor_policy
    )
    result = super_resolve(load_image(args.input), model, cfg, measure_gap=args.measure_gap)

    save_image(result.sr, args.output)
    if args.report:
        Path(args.report).write_text(result.report.to_csv(), encoding="utf-8")

    print(result.report.to_text())
    if result.gap is not None:
        print(f"train/infer gap at pruned windows: {result.gap:.6g}")
    return AppSettings.EXIT_OK
