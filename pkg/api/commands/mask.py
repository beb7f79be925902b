"""
mask command - high-frequency mask generation for one LR image
"""
import argparse

from config.settings import AppSettings
from core.image_io import load_image
from services.freqmask import generate_mask, save_highfreq, save_mask
from api.commands import arguments
from utils.helpers import Utils

def register(subparsers):
    parser = subparsers.add_parser("mask", help="generate a binary processing mask")
    parser.add_argument("input", help="LR image (P6/P5)")
    arguments.add_mask_options(parser, default_dilation=AppSettings.DEFAULT_DILATION["cnn"])
    parser.add_argument("--max-iter", type=arguments.positive_int, default=AppSettings.KMEANS_MAX_ITER,
                        help="k-means iteration cap")
    parser.add_argument("-o", "--output", required=True, help="mask PGM path")
    parser.add_argument("--hfmap", help="optional high-frequency map PGM path")
    parser.set_defaults(handler=handle)

def handle(args: argparse.Namespace) -> int:
    lr = load_image(args.input)
    result = generate_mask(lr, args.strategy, args.dilate, args.max_iter)

    save_mask(result.mask, args.output)
    if args.hfmap:
        save_highfreq(result.highfreq, args.hfmap)

    lines = [
        f"strategy: {result.strategy}",
        f"dilation: {result.dilation_k}",
        f"size: {result.mask.width}x{result.mask.height}",
        f"base coverage: {Utils.format_percent(result.base.coverage())}",
        f"coverage: {Utils.format_percent(result.mask.coverage())}",
    ]
    if result.kmeans is not None:
        km = result.kmeans
        lines.append(f"kmeans: iterations={km.iterations} converged={km.converged} "
                     f"threshold={Utils.format_number(km.threshold)}")
    lines.append(f"mask ms: {result.ms:.3f}")
    print("\n".join(lines))
    return AppSettings.EXIT_OK
