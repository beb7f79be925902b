"""
Dense tensor algebra - padding, unfold, convolution references, GEMM, resampling and metrics.

Tensors are channel-major, row-major float32 arrays of shape (C, H, W). The same functions
serve as the execution substrate of the sparse paths and as their exactness oracles.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple, Union
import numpy as np
import structlog

from core.exceptions import InputFormatError, ShapeMismatchError

logger = structlog.get_logger()

# Fixed (dy, dx) order inside every channel group of an unfolded column
UNFOLD_OFFSETS: Tuple[Tuple[int, int], ...] = tuple((dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1))
CENTER_OFFSET = UNFOLD_OFFSETS.index((0, 0))

BICUBIC_A = -0.5

Scale = Union[int, float, Fraction]

@dataclass(frozen=True)
class Tensor:
    """Immutable (C, H, W) float32 value"""
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float32, copy=True)
        if data.ndim != 3 or 0 in data.shape:
            raise ShapeMismatchError(f"Tensor must be rank 3 with positive dims, got shape {data.shape}")
        if not np.isfinite(data).all():
            raise InputFormatError("Tensor data must be finite")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def zeros(cls, channels: int, height: int, width: int) -> "Tensor":
        return cls(np.zeros((channels, height, width), dtype=np.float32))

    @classmethod
    def from_flat(cls, channels: int, height: int, width: int, values) -> "Tensor":
        """Build from a flat channel-major, row-major sequence"""
        flat = np.asarray(values, dtype=np.float32).ravel()
        if flat.size != channels * height * width:
            raise ShapeMismatchError(
                f"Expected {channels * height * width} values for ({channels}, {height}, {width}), got {flat.size}"
            )
        return cls(flat.reshape(channels, height, width))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.data.shape

    def numpy(self) -> np.ndarray:
        """Writable copy of the underlying data"""
        return self.data.copy()

@dataclass(frozen=True)
class ConvWeights3x3:
    """3x3 convolution taps [out, in, 3, 3] and bias [out]"""
    taps: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float32, copy=True)
        bias = np.array(self.bias, dtype=np.float32, copy=True).ravel()
        if taps.ndim != 4 or taps.shape[2:] != (3, 3):
            raise ShapeMismatchError(f"3x3 taps must have shape [out, in, 3, 3], got {taps.shape}")
        if bias.size != taps.shape[0]:
            raise ShapeMismatchError(f"Bias length {bias.size} does not match {taps.shape[0]} output channels")
        taps.setflags(write=False)
        bias.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "bias", bias)

    @property
    def out_channels(self) -> int:
        return self.taps.shape[0]

    @property
    def in_channels(self) -> int:
        return self.taps.shape[1]

@dataclass(frozen=True)
class ConvWeights1x1:
    """1x1 convolution taps [out, in] and bias [out]"""
    taps: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        taps = np.array(self.taps, dtype=np.float32, copy=True)
        bias = np.array(self.bias, dtype=np.float32, copy=True).ravel()
        if taps.ndim != 2:
            raise ShapeMismatchError(f"1x1 taps must have shape [out, in], got {taps.shape}")
        if bias.size != taps.shape[0]:
            raise ShapeMismatchError(f"Bias length {bias.size} does not match {taps.shape[0]} output channels")
        taps.setflags(write=False)
        bias.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "bias", bias)

    @property
    def out_channels(self) -> int:
        return self.taps.shape[0]

    @property
    def in_channels(self) -> int:
        return self.taps.shape[1]

@dataclass
class MacCounter:
    """Multiply-add counts of the GEMM work actually performed, per layer name"""
    total: int = 0
    by_layer: Dict[str, int] = field(default_factory=dict)

    def add(self, macs: int, layer: str = "gemm"):
        self.total += int(macs)
        self.by_layer[layer] = self.by_layer.get(layer, 0) + int(macs)

def pad_zero(t: Tensor, p: int) -> Tensor:
    """Zero ring of width p around every channel"""
    if p < 0:
        raise ShapeMismatchError(f"Padding must be non-negative, got {p}")
    if p == 0:
        return t
    return Tensor(np.pad(t.data, ((0, 0), (p, p), (p, p))))

def unfold3x3_array(arr: np.ndarray) -> np.ndarray:
    """im2col on a raw (C, H, W) array, returning (9C, H, W)"""
    c, h, w = arr.shape
    padded = np.pad(arr, ((0, 0), (1, 1), (1, 1)))
    cols = np.empty((c, len(UNFOLD_OFFSETS), h, w), dtype=arr.dtype)
    for k, (dy, dx) in enumerate(UNFOLD_OFFSETS):
        cols[:, k] = padded[:, 1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
    return cols.reshape(c * len(UNFOLD_OFFSETS), h, w)

def unfold3x3(t: Tensor) -> Tensor:
    """Expand every pixel into its zero-padded 3x3 neighborhood, channel-major then offset"""
    return Tensor(unfold3x3_array(t.data))

def conv3x3(t: Tensor, w: ConvWeights3x3) -> Tensor:
    """Reference zero-padded stride-1 cross-correlation"""
    if t.channels != w.in_channels:
        raise ShapeMismatchError(f"conv3x3 expects {w.in_channels} input channels, got {t.channels}")

    _, h, wd = t.shape
    padded = np.pad(t.data.astype(np.float64), ((0, 0), (1, 1), (1, 1)))
    taps = w.taps.astype(np.float64)
    out = np.zeros((w.out_channels, h, wd), dtype=np.float64)
    for ky in range(3):
        for kx in range(3):
            out += np.einsum("oc,chw->ohw", taps[:, :, ky, kx], padded[:, ky:ky + h, kx:kx + wd])
    out += w.bias.astype(np.float64)[:, None, None]
    return Tensor(out.astype(np.float32))

def gemm_columns(w: ConvWeights1x1, cols: np.ndarray, counter: Optional[MacCounter] = None,
                 layer: str = "gemm") -> np.ndarray:
    """(out, in) x (in, n) product plus bias, accumulated in float64"""
    if cols.shape[0] != w.in_channels:
        raise ShapeMismatchError(f"GEMM expects {w.in_channels} input rows, got {cols.shape[0]}")

    acc = w.taps.astype(np.float64) @ cols.astype(np.float64)
    acc += w.bias.astype(np.float64)[:, None]
    if counter is not None:
        counter.add(w.out_channels * w.in_channels * cols.shape[1], layer)
    return acc

def gemm1x1(t: Tensor, w: ConvWeights1x1, counter: Optional[MacCounter] = None) -> Tensor:
    """Per-pixel matrix-vector product plus bias"""
    if t.channels != w.in_channels:
        raise ShapeMismatchError(f"gemm1x1 expects {w.in_channels} input channels, got {t.channels}")
    _, h, wd = t.shape
    out = gemm_columns(w, t.data.reshape(t.channels, h * wd), counter)
    return Tensor(out.astype(np.float32).reshape(w.out_channels, h, wd))

def reshape3x3_to_1x1(w: ConvWeights3x3) -> ConvWeights1x1:
    """Flatten [out, in, 3, 3] taps into the unfold3x3 column layout"""
    return ConvWeights1x1(taps=w.taps.reshape(w.out_channels, w.in_channels * 9), bias=w.bias)

def pixel_shuffle(t: Tensor, r: int) -> Tensor:
    """Depth-to-space: channel c*r^2 + dy*r + dx lands on spatial offset (dy, dx)"""
    if r < 1:
        raise ShapeMismatchError(f"Shuffle factor must be positive, got {r}")
    c, h, w = t.shape
    if c % (r * r):
        raise ShapeMismatchError(f"{c} channels are not divisible by r^2 = {r * r}")
    if r == 1:
        return t
    c_out = c // (r * r)
    arr = t.data.reshape(c_out, r, r, h, w).transpose(0, 3, 1, 4, 2).reshape(c_out, h * r, w * r)
    return Tensor(arr)

def pixel_unshuffle(t: Tensor, r: int) -> Tensor:
    """Space-to-depth, the inverse of pixel_shuffle"""
    if r < 1:
        raise ShapeMismatchError(f"Shuffle factor must be positive, got {r}")
    c, h, w = t.shape
    if h % r or w % r:
        raise ShapeMismatchError(f"Spatial dims ({h}, {w}) are not divisible by {r}")
    if r == 1:
        return t
    arr = t.data.reshape(c, h // r, r, w // r, r).transpose(0, 2, 4, 1, 3).reshape(c * r * r, h // r, w // r)
    return Tensor(arr)

def cubic_kernel(x: np.ndarray, a: float = BICUBIC_A) -> np.ndarray:
    """Keys cubic convolution kernel"""
    ax = np.abs(x)
    ax2 = ax * ax
    ax3 = ax2 * ax
    near = (a + 2.0) * ax3 - (a + 3.0) * ax2 + 1.0
    far = a * ax3 - 5.0 * a * ax2 + 8.0 * a * ax - 4.0 * a
    return np.where(ax <= 1.0, near, np.where(ax < 2.0, far, 0.0))

def _as_fraction(scale: Scale) -> Fraction:
    frac = Fraction(scale).limit_denominator(1_000_000) if isinstance(scale, float) else Fraction(scale)
    if frac <= 0:
        raise ShapeMismatchError(f"Scale must be positive, got {scale}")
    return frac

def resized_length(length: int, scale: Scale) -> int:
    """round(length * scale), half away from zero, at least 1"""
    return max(1, math.floor(length * _as_fraction(scale) + Fraction(1, 2)))

def resize_weight_matrix(in_len: int, out_len: int, scale: Scale) -> np.ndarray:
    """(out_len, in_len) bicubic interpolation matrix with edge clamping"""
    s = float(_as_fraction(scale))
    # Downscaling stretches the kernel by 1/s so it low-passes before sampling
    kernel_scale = min(s, 1.0)
    support = 2.0 / kernel_scale
    centers = (np.arange(out_len, dtype=np.float64) + 0.5) / s - 0.5
    left = np.floor(centers - support).astype(np.int64) + 1
    n_taps = int(math.ceil(2.0 * support)) + 1
    taps = left[:, None] + np.arange(n_taps)[None, :]
    weights = kernel_scale * cubic_kernel((centers[:, None] - taps) * kernel_scale)
    weights /= weights.sum(axis=1, keepdims=True)

    matrix = np.zeros((out_len, in_len), dtype=np.float64)
    rows = np.repeat(np.arange(out_len), n_taps)
    np.add.at(matrix, (rows, np.clip(taps, 0, in_len - 1).ravel()), weights.ravel())
    return matrix

def bicubic_resize(t: Tensor, scale: Scale) -> Tensor:
    """Separable bicubic (a=-0.5) resize, anti-aliased on downscale"""
    frac = _as_fraction(scale)
    if frac == 1:
        return t
    _, h, w = t.shape
    rows = resize_weight_matrix(h, resized_length(h, frac), frac)
    cols = resize_weight_matrix(w, resized_length(w, frac), frac)
    out = np.einsum("yh,chw,xw->cyx", rows, t.data.astype(np.float64), cols)
    return Tensor(out.astype(np.float32))

def clamp01(t: Tensor) -> Tensor:
    return Tensor(np.clip(t.data, 0.0, 1.0))

def psnr(a: Tensor, b: Tensor, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; identical inputs give math.inf"""
    if a.shape != b.shape:
        raise ShapeMismatchError(f"PSNR shape mismatch: {a.shape} vs {b.shape}")
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)
