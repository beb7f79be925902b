"""
flops command - analytic dense vs sparse cost of a model under a given mask
"""
import argparse

from api.commands import arguments
from config.settings import AppSettings
from services.flops_accounting import report
from services.freqmask import load_mask
from utils.helpers import Utils

def register(subparsers):
    parser = subparsers.add_parser("flops", help="report per-layer MACs for a mask")
    arguments.add_model_options(parser, weights=False)
    parser.add_argument("--mask", required=True, help="mask PGM (bit = pixel > 0.5)")
    parser.add_argument("--sigma", type=arguments.sigma_value, default=AppSettings.DEFAULT_SIGMA,
                        help="window pruning threshold for Transformer bodies")
    parser.add_argument("--format", choices=["text", "csv"], default="text")
    parser.set_defaults(handler=handle)

def handle(args: argparse.Namespace) -> int:
    spec = Utils.load_spec(args.model)
    result = report(spec, load_mask(args.mask), sigma=args.sigma)
    if args.format == "csv":
        print(result.to_csv(), end="")
    else:
        print(result.to_text())
    return AppSettings.EXIT_OK
