"""
Training-free mask generation - high-frequency map, 2-means binarization, dilation and window decisions
"""
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union
import numpy as np
import structlog
from scipy import ndimage

from config.settings import AppSettings
from core.exceptions import ShapeMismatchError
from core.image_io import load_gray, save_gray
from core.tensor_core import Tensor
from models.model_spec import MaskStrategy

logger = structlog.get_logger()

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float64)

@dataclass(frozen=True)
class BitMask2D:
    """Binary (H, W) map; 1 = process, 0 = prune"""
    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, copy=True)
        if bits.ndim != 2 or 0 in bits.shape:
            raise ShapeMismatchError(f"Mask must be a non-empty 2-D array, got shape {bits.shape}")
        if bits.dtype != np.bool_:
            if not np.isin(bits, (0, 1)).all():
                raise ShapeMismatchError("Mask elements must be 0 or 1")
            bits = bits.astype(np.bool_)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def ones(cls, height: int, width: int) -> "BitMask2D":
        return cls(np.ones((height, width), dtype=np.bool_))

    @classmethod
    def zeros(cls, height: int, width: int) -> "BitMask2D":
        return cls(np.zeros((height, width), dtype=np.bool_))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def count(self) -> int:
        return int(self.bits.sum())

    def coverage(self) -> float:
        return self.count() / self.bits.size

@dataclass(frozen=True)
class HighFreqMap:
    """Per-pixel high-frequency magnitude, max-normalized to [0, 1]"""
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float32, copy=True)
        if values.ndim != 2 or 0 in values.shape:
            raise ShapeMismatchError(f"High-frequency map must be 2-D, got shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

@dataclass(frozen=True)
class WindowDecision:
    """Per-window keep (1) / prune (0) bits over a rows x cols grid of win x win windows"""
    bits: np.ndarray
    win: int

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.bool_, copy=True)
        if bits.ndim != 2:
            raise ShapeMismatchError(f"Window decision must be 2-D, got shape {bits.shape}")
        if self.win < 1:
            raise ShapeMismatchError(f"Window side must be positive, got {self.win}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def all_kept(cls, rows: int, cols: int, win: int) -> "WindowDecision":
        return cls(np.ones((rows, cols), dtype=np.bool_), win)

    @property
    def rows(self) -> int:
        return self.bits.shape[0]

    @property
    def cols(self) -> int:
        return self.bits.shape[1]

    def kept(self) -> int:
        return int(self.bits.sum())

    def kept_indices(self) -> np.ndarray:
        """Flat row-major indices of kept windows"""
        return np.flatnonzero(self.bits.ravel())

@dataclass(frozen=True)
class KmeansResult:
    center_low: float
    center_high: float
    threshold: float
    iterations: int
    converged: bool
    mask: BitMask2D

@dataclass(frozen=True)
class MaskArtifacts:
    """Everything the mask stage produced for one image"""
    highfreq: HighFreqMap
    base: BitMask2D
    mask: BitMask2D
    strategy: str
    dilation_k: int
    kmeans: Optional[KmeansResult]
    ms: float

def to_luma(img: Tensor) -> Tensor:
    """BT.601 luma of an RGB tensor"""
    if img.channels != 3:
        raise ShapeMismatchError(f"to_luma expects 3 channels, got {img.channels}")
    luma = np.tensordot(LUMA_WEIGHTS, img.data.astype(np.float64), axes=1)
    return Tensor(luma[None].astype(np.float32))

def gaussian_weights(size: int, sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps"""
    if size < 1 or size % 2 == 0:
        raise ShapeMismatchError(f"Blur size must be a positive odd integer, got {size}")
    if sigma <= 0:
        raise ValueError(f"Blur sigma must be positive, got {sigma}")
    half = (size - 1) // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    weights = np.exp(-(offsets * offsets) / (2.0 * sigma * sigma))
    return weights / weights.sum()

def gaussian_blur(t: Tensor, size: int, sigma: float) -> Tensor:
    """Separable Gaussian blur with mirror padding (border pixel not repeated)"""
    weights = gaussian_weights(size, sigma)
    if size == 1:
        return t
    arr = t.data.astype(np.float64)
    arr = ndimage.correlate1d(arr, weights, axis=1, mode="mirror")
    arr = ndimage.correlate1d(arr, weights, axis=2, mode="mirror")
    return Tensor(arr.astype(np.float32))

def highfreq_map(lr: Tensor) -> HighFreqMap:
    """|luma - blur(luma)|, divided by its maximum"""
    luma = to_luma(lr)
    blurred = gaussian_blur(luma, AppSettings.BLUR_SIZE, AppSettings.BLUR_SIGMA)
    residual = np.abs(luma.data[0].astype(np.float64) - blurred.data[0].astype(np.float64))
    peak = residual.max()
    if peak < AppSettings.HF_MAX_EPSILON:
        return HighFreqMap(np.zeros_like(residual))
    return HighFreqMap(residual / peak)

def _degenerate(h: HighFreqMap) -> KmeansResult:
    return KmeansResult(center_low=0.0, center_high=0.0, threshold=0.0, iterations=0, converged=True,
                        mask=BitMask2D.zeros(h.height, h.width))

def kmeans2_binarize(h: HighFreqMap, max_iter: int = AppSettings.KMEANS_MAX_ITER) -> KmeansResult:
    """1-D Lloyd's algorithm with k=2, seeded by a decision boundary at 0.5"""
    values = h.values.astype(np.float64).ravel()
    high = values >= AppSettings.KMEANS_INITIAL_BOUNDARY

    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        # Single-cluster degeneracy, including flat and all-zero maps
        if high.all() or not high.any():
            return _degenerate(h)
        center_low = values[~high].mean()
        center_high = values[high].mean()
        threshold = 0.5 * (center_low + center_high)
        assigned = values >= threshold
        if np.array_equal(assigned, high):
            converged = True
            break
        high = assigned

    if not converged:
        if high.all() or not high.any():
            return _degenerate(h)
        center_low = values[~high].mean()
        center_high = values[high].mean()
        threshold = 0.5 * (center_low + center_high)
        logger.warning("K-means did not converge", max_iter=max_iter)

    return KmeansResult(
        center_low=float(center_low),
        center_high=float(center_high),
        threshold=float(threshold),
        iterations=iterations,
        converged=converged,
        mask=BitMask2D(high.reshape(h.height, h.width))
    )

def binarize_fixed(h: HighFreqMap, thresh: float) -> BitMask2D:
    """bit = 1 iff value >= thresh"""
    return BitMask2D(h.values >= thresh)

def binarize_median(h: HighFreqMap) -> BitMask2D:
    """bit = 1 iff value > lower median"""
    ordered = np.sort(h.values.ravel())
    median = ordered[(ordered.size - 1) // 2]
    return BitMask2D(h.values > median)

def dilate(m: BitMask2D, k: int) -> BitMask2D:
    """Binary dilation with a k x k all-ones element; outside the image counts as 0"""
    if k < 1 or k % 2 == 0:
        raise ShapeMismatchError(f"Dilation kernel must be a positive odd integer, got {k}")
    if k == 1:
        return m
    structure = np.ones((k, k), dtype=np.bool_)
    return BitMask2D(ndimage.binary_dilation(m.bits, structure=structure, border_value=0))

def erode(m: BitMask2D, k: int) -> BitMask2D:
    """Binary erosion with a k x k all-ones element; outside the image counts as 0"""
    if k < 1 or k % 2 == 0:
        raise ShapeMismatchError(f"Erosion kernel must be a positive odd integer, got {k}")
    if k == 1:
        return m
    structure = np.ones((k, k), dtype=np.bool_)
    return BitMask2D(ndimage.binary_erosion(m.bits, structure=structure, border_value=0))

def pad_mask(m: BitMask2D, win: int) -> BitMask2D:
    """Zero-pad bottom and right to multiples of win"""
    pad_h = (-m.height) % win
    pad_w = (-m.width) % win
    if not pad_h and not pad_w:
        return m
    return BitMask2D(np.pad(m.bits, ((0, pad_h), (0, pad_w))))

def window_decision(m: BitMask2D, win: int, sigma: float) -> WindowDecision:
    """Keep a window iff its mean mask value is >= sigma"""
    if win < 1 or m.height % win or m.width % win:
        raise ShapeMismatchError(f"Mask {m.height}x{m.width} is not divisible into {win}x{win} windows")
    rows, cols = m.height // win, m.width // win
    means = m.bits.reshape(rows, win, cols, win).mean(axis=(1, 3))
    return WindowDecision(means >= sigma, win)

def apply_strategy(h: HighFreqMap, strategy: MaskStrategy,
                   max_iter: int = AppSettings.KMEANS_MAX_ITER) -> tuple:
    """Binarize with the chosen strategy; returns (mask, kmeans result or None)"""
    if strategy.kind == "kmeans":
        result = kmeans2_binarize(h, max_iter)
        return result.mask, result
    if strategy.kind == "fixed":
        return binarize_fixed(h, strategy.thresh), None
    return binarize_median(h), None

def generate_mask(lr: Tensor, strategy: MaskStrategy, dilation_k: int,
                  max_iter: int = AppSettings.KMEANS_MAX_ITER) -> MaskArtifacts:
    """highfreq_map -> strategy -> dilate, timed"""
    start_time = time.perf_counter()
    highfreq = highfreq_map(lr)
    base, kmeans = apply_strategy(highfreq, strategy, max_iter)
    mask = dilate(base, dilation_k)
    ms = (time.perf_counter() - start_time) * 1000.0

    logger.info("Mask generated",
                strategy=strategy.label,
                dilation_k=dilation_k,
                base_coverage=round(base.coverage(), 6),
                coverage=round(mask.coverage(), 6),
                iterations=kmeans.iterations if kmeans else None,
                ms=round(ms, 3))
    return MaskArtifacts(highfreq=highfreq, base=base, mask=mask, strategy=strategy.label,
                         dilation_k=dilation_k, kmeans=kmeans, ms=ms)

def save_mask(m: BitMask2D, path: Union[str, Path]):
    """P5 export, 1 -> 255"""
    save_gray(m.bits.astype(np.float32), path)

def save_highfreq(h: HighFreqMap, path: Union[str, Path]):
    """P5 export, maxval 255"""
    save_gray(h.values, path)

def load_mask(path: Union[str, Path]) -> BitMask2D:
    """Read a P5/P6 mask back; bit = 1 where the scaled pixel exceeds 0.5"""
    return BitMask2D(load_gray(path) > 0.5)
