"""
psnr command
"""
import argparse

from config.settings import AppSettings
from services.sr_pipeline import psnr_compare
from utils.helpers import Utils

def register(subparsers):
    parser = subparsers.add_parser("psnr", help="PSNR between two images (peak 1.0, RGB)")
    parser.add_argument("a")
    parser.add_argument("b")
    parser.set_defaults(handler=handle)

def handle(args: argparse.Namespace) -> int:
    print(Utils.format_number(psnr_compare(args.a, args.b)))
    return AppSettings.EXIT_OK
