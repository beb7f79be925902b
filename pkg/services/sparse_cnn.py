"""
Masked CNN body - dense-masked training forward and gather / GEMM / scatter inference forward.

A block replaces a 3x3 conv by unfold3x3 followed by a (9*C_in -> C_out) 1x1 product. With
neighbor policy "masked" an unfolded column reads g_in * m, so pruned neighbors contribute 0;
with "dense" it reads g_in and only output positions are pruned. Both modes share the policy,
which keeps train and infer outputs equal.
"""
from dataclasses import dataclass
from typing import List, Literal, Optional
import numpy as np
import structlog

from core.exceptions import ShapeMismatchError
from core.tensor_core import (
    UNFOLD_OFFSETS,
    ConvWeights1x1,
    ConvWeights3x3,
    MacCounter,
    Tensor,
    gemm_columns,
    reshape3x3_to_1x1,
    unfold3x3_array,
)
from services.freqmask import BitMask2D, erode

logger = structlog.get_logger()

Activation = Literal["relu", "prelu", "none"]
NeighborPolicy = Literal["masked", "dense"]
Mode = Literal["train", "infer"]

@dataclass(frozen=True)
class MaskedConvBlock:
    """Unfold + 1x1 block with an activation inside the masked region"""
    weights: ConvWeights1x1
    activation: Activation = "none"
    prelu_slope: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.weights.in_channels % 9:
            raise ShapeMismatchError(
                f"Block input width {self.weights.in_channels} is not 9 x C_in"
            )
        if self.activation == "prelu":
            if self.prelu_slope is None:
                raise ShapeMismatchError("prelu activation needs a per-channel slope")
            slope = np.array(self.prelu_slope, dtype=np.float32, copy=True).ravel()
            if slope.size != self.weights.out_channels:
                raise ShapeMismatchError(
                    f"prelu slope has {slope.size} entries for {self.weights.out_channels} channels"
                )
            slope.setflags(write=False)
            object.__setattr__(self, "prelu_slope", slope)

    @classmethod
    def from_3x3(cls, weights: ConvWeights3x3, activation: Activation = "none",
                 prelu_slope: Optional[np.ndarray] = None) -> "MaskedConvBlock":
        return cls(reshape3x3_to_1x1(weights), activation, prelu_slope)

    @property
    def in_channels(self) -> int:
        return self.weights.in_channels // 9

    @property
    def out_channels(self) -> int:
        return self.weights.out_channels

    def activate(self, x: np.ndarray) -> np.ndarray:
        """Apply the activation to a (C_out, n) float64 array"""
        if self.activation == "relu":
            return np.maximum(x, 0.0)
        if self.activation == "prelu":
            slope = self.prelu_slope.astype(np.float64)[:, None]
            return np.where(x >= 0.0, x, slope * x)
        return x

@dataclass(frozen=True)
class GatherPlan:
    """Row-major (y, x) positions of the 1-bits of a mask"""
    ys: np.ndarray
    xs: np.ndarray
    height: int
    width: int

    @property
    def q(self) -> int:
        return int(self.ys.size)

    @property
    def indices(self) -> List[tuple]:
        return list(zip(self.ys.tolist(), self.xs.tolist()))

def build_gather_plan(m: BitMask2D) -> GatherPlan:
    """Deterministic row-major enumeration of all 1-bits"""
    ys, xs = np.nonzero(m.bits)
    return GatherPlan(ys=ys.astype(np.int64), xs=xs.astype(np.int64), height=m.height, width=m.width)

def _check_shapes(g_in: Tensor, blk: MaskedConvBlock, m: BitMask2D):
    if g_in.channels != blk.in_channels:
        raise ShapeMismatchError(f"Block expects {blk.in_channels} channels, got {g_in.channels}")
    if (m.height, m.width) != (g_in.height, g_in.width):
        raise ShapeMismatchError(
            f"Mask {m.height}x{m.width} does not match features {g_in.height}x{g_in.width}"
        )

def _passthrough(g_in: Tensor, blk: MaskedConvBlock) -> np.ndarray:
    """Values kept at pruned positions; requires square blocks when anything is pruned"""
    if blk.in_channels != blk.out_channels:
        raise ShapeMismatchError(
            f"Pruned positions pass g_in through, so a {blk.in_channels}->{blk.out_channels} block needs a full mask"
        )
    return g_in.numpy()

def block_forward_train(g_in: Tensor, blk: MaskedConvBlock, m: BitMask2D,
                        neighbor_policy: NeighborPolicy = "masked") -> Tensor:
    """act(gemm(unfold(g_in) * m)) * m + g_in * (1 - m) over the full map"""
    _check_shapes(g_in, blk, m)
    c, h, w = g_in.shape
    keep = m.bits.astype(np.float32)

    source = g_in.data * keep[None] if neighbor_policy == "masked" else g_in.data
    cols = unfold3x3_array(source) * keep[None]
    conv = blk.activate(gemm_columns(blk.weights, cols.reshape(9 * c, h * w))).reshape(blk.out_channels, h, w)

    if m.bits.all():
        return Tensor(conv.astype(np.float32))
    out = conv.astype(np.float32) * keep[None] + _passthrough(g_in, blk) * (1.0 - keep)[None]
    return Tensor(out)

def gather_columns(source: np.ndarray, plan: GatherPlan) -> np.ndarray:
    """(9C, Q) unfolded columns at the plan positions, zero outside the image"""
    c = source.shape[0]
    padded = np.pad(source, ((0, 0), (1, 1), (1, 1)))
    cols = np.empty((c, len(UNFOLD_OFFSETS), plan.q), dtype=source.dtype)
    for k, (dy, dx) in enumerate(UNFOLD_OFFSETS):
        cols[:, k] = padded[:, plan.ys + 1 + dy, plan.xs + 1 + dx]
    return cols.reshape(c * len(UNFOLD_OFFSETS), plan.q)

def block_forward_infer(g_in: Tensor, blk: MaskedConvBlock, m: BitMask2D,
                        neighbor_policy: NeighborPolicy = "masked",
                        plan: Optional[GatherPlan] = None,
                        counter: Optional[MacCounter] = None,
                        layer: str = "body") -> Tensor:
    """Gather Q columns, run the GEMM on them only, scatter back; other positions copy g_in"""
    _check_shapes(g_in, blk, m)
    plan = plan if plan is not None else build_gather_plan(m)
    if plan.q == 0:
        _passthrough(g_in, blk)
        return g_in

    full = plan.q == m.bits.size
    source = g_in.data * m.bits[None] if neighbor_policy == "masked" and not full else g_in.data
    cols = gather_columns(source, plan)
    result = blk.activate(gemm_columns(blk.weights, cols, counter, layer)).astype(np.float32)

    if full:
        return Tensor(result.reshape(blk.out_channels, m.height, m.width))
    out = _passthrough(g_in, blk)
    out[:, plan.ys, plan.xs] = result
    return Tensor(out)

def run_body_cnn(f: Tensor, blocks: List[MaskedConvBlock], m: BitMask2D, mode: Mode = "infer",
                 neighbor_policy: NeighborPolicy = "masked",
                 counter: Optional[MacCounter] = None) -> Tensor:
    """Apply blocks in order under one shared mask"""
    channels = f.channels
    for i, blk in enumerate(blocks):
        if blk.in_channels != channels:
            raise ShapeMismatchError(f"Block {i} expects {blk.in_channels} channels, predecessor emits {channels}")
        channels = blk.out_channels

    plan = build_gather_plan(m) if mode == "infer" else None
    g = f
    for i, blk in enumerate(blocks):
        if mode == "train":
            g = block_forward_train(g, blk, m, neighbor_policy)
        else:
            g = block_forward_infer(g, blk, m, neighbor_policy, plan, counter, layer=f"body.{i}")

    logger.debug("CNN body finished", mode=mode, blocks=len(blocks), q=plan.q if plan else None)
    return g

def dense_agreement_region(m: BitMask2D, n_blocks: int, neighbor_policy: NeighborPolicy = "masked") -> BitMask2D:
    """Pixels where a masked n-block body provably equals the all-ones (dense) body"""
    if n_blocks == 0:
        return BitMask2D.ones(m.height, m.width)
    k = 2 * n_blocks + 1 if neighbor_policy == "masked" else 2 * n_blocks - 1
    return erode(m, k)
