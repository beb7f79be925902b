"""
bench command - dilation, sigma or strategy sweeps over a corpus directory
"""
import argparse

from api.commands import arguments
from config.settings import AppSettings
from services.bench_runner import bench_sweep, summarize, write_bench_csv
from utils.helpers import Utils

def register(subparsers):
    parser = subparsers.add_parser("bench", help="sweep settings over a corpus")
    arguments.add_model_options(parser)
    parser.add_argument("--corpus", required=True, help="directory of LR PPM/PGM images")
    parser.add_argument("--sweep", choices=["dilate", "sigma", "strategy"], required=True)
    parser.add_argument("--threads", type=arguments.positive_int, default=None,
                        help="worker threads (default: AMSR_THREADS, else min(4, cpus))")
    parser.add_argument("-o", "--output", required=True, help="results CSV path")
    parser.set_defaults(handler=handle)

def handle(args: argparse.Namespace) -> int:
    model = Utils.load_model(args.model, args.weights)
    frame = bench_sweep(model, args.corpus, args.sweep, threads=args.threads)
    write_bench_csv(frame, args.output)

    for row in summarize(frame).itertuples(index=False):
        print(f"{row.setting:<12} coverage {Utils.format_percent(row.coverage):>8}  "
              f"fraction {Utils.format_percent(row.fraction):>8}")
    return AppSettings.EXIT_OK
