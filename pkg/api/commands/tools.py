"""
Tooling commands - seeded weights, the bundled corpus and bicubic resizing
"""
import argparse

from api.commands import arguments
from config.settings import AppSettings
from core.image_io import load_image, save_image
from core.tensor_core import bicubic_resize, clamp01
from core.weight_store import save_weights
from services.corpus import HR_SIZE, LR_SCALE, write_corpus
from services.model_binding import seed_weights
from utils.helpers import Utils

def register(subparsers):
    init = subparsers.add_parser("init-weights", help="write deterministically seeded weights for a spec")
    arguments.add_model_options(init, weights=False)
    init.add_argument("--seed", type=int, default=0)
    init.add_argument("-o", "--output", required=True, help="AMSRW1 output path")
    init.set_defaults(handler=handle_init_weights)

    corpus = subparsers.add_parser("corpus", help="write the bundled synthetic LR corpus")
    corpus.add_argument("-o", "--output", required=True, help="output directory")
    corpus.add_argument("--hr-size", type=arguments.positive_int, default=HR_SIZE)
    corpus.add_argument("--scale", type=arguments.positive_int, default=LR_SCALE)
    corpus.set_defaults(handler=handle_corpus)

    resize = subparsers.add_parser("resize", help="bicubic resize (a=-0.5), anti-aliased on downscale")
    resize.add_argument("input")
    resize.add_argument("--scale", type=arguments.scale_factor, required=True, help="e.g. 4, 1/4 or 0.25")
    resize.add_argument("-o", "--output", required=True)
    resize.set_defaults(handler=handle_resize)

def handle_init_weights(args: argparse.Namespace) -> int:
    store = seed_weights(Utils.load_spec(args.model), args.seed)
    save_weights(store, args.output)
    print(f"{len(store.names)} tensors, {store.payload.size} values -> {args.output}")
    return AppSettings.EXIT_OK

def handle_corpus(args: argparse.Namespace) -> int:
    for path in write_corpus(args.output, args.hr_size, args.scale):
        print(path)
    return AppSettings.EXIT_OK

def handle_resize(args: argparse.Namespace) -> int:
    out = clamp01(bicubic_resize(load_image(args.input), args.scale))
    save_image(out, args.output)
    print(f"{out.width}x{out.height} -> {args.output}")
    return AppSettings.EXIT_OK
