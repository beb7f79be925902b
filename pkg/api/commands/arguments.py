"""
Shared argument types and options for the command modules
"""
import argparse
from fractions import Fraction

from config.settings import AppSettings
from models.model_spec import MaskStrategy

def odd_kernel(text: str) -> int:
    """Positive odd integer"""
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid kernel size '{text}'")
    if value < 1 or value % 2 == 0:
        raise argparse.ArgumentTypeError(f"kernel size must be a positive odd integer, got {value}")
    return value

def sigma_value(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid sigma '{text}'")
    low, high = AppSettings.SIGMA_RANGE
    if not low <= value <= high:
        raise argparse.ArgumentTypeError(f"sigma must lie in [{low:g}, {high:g}], got {value:g}")
    return value

def mask_strategy(text: str) -> MaskStrategy:
    try:
        return MaskStrategy.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))

def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer '{text}'")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value

def scale_factor(text: str) -> Fraction:
    """'4', '1/4' or '0.25'"""
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"invalid scale '{text}'")
    if value <= 0:
        raise argparse.ArgumentTypeError(f"scale must be positive, got {text}")
    return value

def add_mask_options(parser: argparse.ArgumentParser, default_dilation=None):
    """--strategy and --dilate, shared by mask and sr"""
    parser.add_argument("--strategy", type=mask_strategy, default=MaskStrategy(),
                        help="kmeans (default), median or fixed:<t>")
    parser.add_argument("--dilate", type=odd_kernel, default=default_dilation,
                        help="odd dilation kernel size")

def add_model_options(parser: argparse.ArgumentParser, weights: bool = True):
    parser.add_argument("--model", required=True, help="model spec JSON")
    if weights:
        parser.add_argument("--weights", required=True, help="AMSRW1 weight file")
