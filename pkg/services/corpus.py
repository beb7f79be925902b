"""
Bundled synthetic corpus - procedural HR scenes bicubic-downscaled to LR
"""
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Tuple, Union
import numpy as np
import structlog

from core.exceptions import InputFormatError
from core.image_io import save_image
from core.tensor_core import Tensor, bicubic_resize, clamp01

logger = structlog.get_logger()

HR_SIZE = 256
LR_SCALE = 4
IMAGE_SUFFIXES = (".ppm", ".pgm")

def _grid(size: int) -> Tuple[np.ndarray, np.ndarray]:
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    return y + 0.5, x + 0.5

def _smoothstep(edge: float, width: float, d: np.ndarray) -> np.ndarray:
    """1 inside (d < edge), 0 outside, linear ramp of the given width"""
    return np.clip((edge - d) / width + 0.5, 0.0, 1.0)

def scene_dots(size: int) -> np.ndarray:
    """Dots whose density ramps from empty on the left to full on the right"""
    rng = np.random.default_rng(7)
    cell = 8
    n = size // cell
    present = rng.random((n, n)) < (np.arange(n) + 0.5)[None, :] / n
    y, x = _grid(size)
    cy, cx = (y // cell).astype(int), (x // cell).astype(int)
    dist = np.hypot(y - (cy + 0.5) * cell, x - (cx + 0.5) * cell)
    dots = present[cy, cx] * _smoothstep(2.5, 1.0, dist)
    base = 0.85 - 0.75 * dots
    return np.stack([base, base * 0.95, 0.9 - 0.6 * dots])

def scene_rings(size: int) -> np.ndarray:
    """Chirped concentric rings: smooth at the center, dense toward the corners"""
    y, x = _grid(size)
    r = np.hypot(y - size / 2, x - size / 2) / size
    phase = 2.0 * np.pi * 16.0 * r * r
    return np.stack([0.5 + 0.45 * np.cos(phase), 0.5 + 0.45 * np.cos(phase + 1.0), np.full_like(r, 0.6)])

def scene_checker_flat(size: int) -> np.ndarray:
    """Checkerboard below a shallow diagonal, flat color above it"""
    y, x = _grid(size)
    checker = ((y // 8 + x // 8) % 2) * 0.6 + 0.2
    below = y > 0.35 * size + 0.3 * x
    return np.stack([np.where(below, checker, 0.55),
                     np.where(below, checker * 0.9, 0.6),
                     np.where(below, 1.0 - checker, 0.5)])

def scene_shapes(size: int) -> np.ndarray:
    """Hard-edged rectangles and a thin bar on a gradient"""
    y, x = _grid(size)
    img = np.stack([0.2 + 0.6 * (x + y) / (2 * size)] * 3)
    rects = [
        (0.10, 0.10, 0.35, 0.45, (0.9, 0.2, 0.2)),
        (0.55, 0.15, 0.90, 0.30, (0.1, 0.7, 0.3)),
        (0.40, 0.55, 0.70, 0.95, (0.2, 0.3, 0.9)),
        (0.75, 0.50, 0.95, 0.70, (0.95, 0.9, 0.1)),
    ]
    for top, left, bottom, right, color in rects:
        inside = (y >= top * size) & (y < bottom * size) & (x >= left * size) & (x < right * size)
        for c in range(3):
            img[c][inside] = color[c]
    bar = np.abs(y - 0.8 * size) < 1.5
    img[:, bar & (x < 0.35 * size)] = 0.05
    return img

def scene_gradient(size: int) -> np.ndarray:
    """Smooth color gradient with a few soft-edged disks"""
    y, x = _grid(size)
    img = np.stack([x / size, y / size, 0.5 + 0.3 * np.sin(2.0 * np.pi * x / size)])
    for cy, cx, radius, value in [(0.3, 0.3, 0.12, 0.9), (0.7, 0.6, 0.18, 0.15), (0.25, 0.75, 0.08, 0.5)]:
        alpha = _smoothstep(radius * size, 6.0, np.hypot(y - cy * size, x - cx * size))
        img = img * (1.0 - alpha) + value * alpha
    return img

SCENES: Dict[str, Callable[[int], np.ndarray]] = {
    "dots": scene_dots,
    "rings": scene_rings,
    "checker_flat": scene_checker_flat,
    "shapes": scene_shapes,
    "gradient": scene_gradient,
}

def hr_scene(name: str, size: int = HR_SIZE) -> Tensor:
    if name not in SCENES:
        raise KeyError(f"Unknown scene '{name}'")
    return Tensor(np.clip(SCENES[name](size), 0.0, 1.0))

def downscale(hr: Tensor, scale: int = LR_SCALE) -> Tensor:
    """Bicubic x(1/scale), clamped back into [0, 1]"""
    return clamp01(bicubic_resize(hr, Fraction(1, scale)))

def build_corpus(size: int = HR_SIZE, scale: int = LR_SCALE) -> List[Tuple[str, Tensor]]:
    """(file stem, LR tensor) pairs in bundle order"""
    return [(f"{i:02d}_{name}", downscale(hr_scene(name, size), scale)) for i, name in enumerate(SCENES)]

def write_corpus(out_dir: Union[str, Path], size: int = HR_SIZE, scale: int = LR_SCALE) -> List[Path]:
    """Write the LR corpus as P6 files"""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for stem, lr in build_corpus(size, scale):
        path = out / f"{stem}.ppm"
        save_image(lr, path)
        paths.append(path)
    logger.info("Corpus written", directory=str(out), images=len(paths), lr_size=size // scale)
    return paths

def list_corpus(corpus_dir: Union[str, Path]) -> List[Path]:
    """Sorted PPM/PGM files of a corpus directory"""
    root = Path(corpus_dir)
    if not root.is_dir():
        raise InputFormatError(f"Corpus directory {root} does not exist")
    paths = sorted(p for p in root.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise InputFormatError(f"Corpus directory {root} contains no PPM/PGM images")
    return paths
