"""
Analytic multiply-add accounting for dense and masked execution
"""
from typing import List, Literal, Optional, Tuple, Union
import structlog

from config.settings import AppSettings
from core.exceptions import ShapeMismatchError
from models.model_spec import CnnBodySpec, ModelSpec, StlBodySpec
from models.reports import FlopsReport, LayerMacs
from services.freqmask import BitMask2D, WindowDecision, pad_mask, window_decision

logger = structlog.get_logger()

KERNEL_TAPS = {"3x3": 9, "1x1": 1}

def macs_conv(kind: Literal["3x3", "1x1"], c_in: int, c_out: int, h: int, w: int) -> int:
    """h * w * c_in * c_out * taps"""
    if min(c_in, c_out, h, w) < 1:
        raise ShapeMismatchError(f"Conv dims must be positive, got c_in={c_in} c_out={c_out} h={h} w={w}")
    return h * w * c_in * c_out * KERNEL_TAPS[kind]

def macs_masked_conv(c_in: int, c_out: int, q: int) -> int:
    """Q x C_out x (9 x C_in)"""
    if q < 0:
        raise ShapeMismatchError(f"Q must be non-negative, got {q}")
    return q * 9 * c_in * c_out

def macs_stl(dim: int, heads: int, hidden: int, win: int, kept_windows: int) -> int:
    """qkv + attention (QK^T and AV) + projection + MLP per kept window"""
    if min(dim, heads, hidden, win) < 1:
        raise ShapeMismatchError("STL dims must be positive")
    n = win * win
    per_window = (3 * n * dim * dim
                  + 2 * heads * n * n * (dim // heads)
                  + n * dim * dim
                  + 2 * n * dim * hidden)
    return kept_windows * per_window

def stl_overhead_ops(dim: int, heads: int, hidden: int, win: int, kept_windows: int) -> int:
    """Elementwise work outside the GEMMs: two LNs, softmax, GELU, two residual adds"""
    n = win * win
    return kept_windows * (2 * n * dim + heads * n * n + n * hidden + 2 * n * dim)

def cnn_overhead_ops(c_in: int, c_out: int, q: int, activation: str) -> int:
    """Gather of 9*C_in values and scatter of C_out values per sampled pixel, plus activation"""
    act = q * c_out if activation != "none" else 0
    return q * 9 * c_in + q * c_out + act

def head_tail_layers(spec: ModelSpec, h: int, w: int) -> Tuple[LayerMacs, List[LayerMacs]]:
    """Dense-only head and tail layers at LR size (h, w)"""
    head = macs_conv("3x3", 3, spec.channels, h, w)
    tail_kind = "3x3" if spec.tail.kernel == 3 else "1x1"
    tail_conv = macs_conv(tail_kind, spec.body_out_channels, 3 * spec.scale ** 2, h, w)
    tail = [LayerMacs(name="tail.conv", dense_macs=tail_conv, sparse_macs=tail_conv)]
    if spec.tail.final_conv:
        final = macs_conv("3x3", 3, 3, spec.scale * h, spec.scale * w)
        tail.append(LayerMacs(name="tail.final", dense_macs=final, sparse_macs=final))
    return LayerMacs(name="head", dense_macs=head, sparse_macs=head), tail

def _cnn_body(spec: ModelSpec, m: BitMask2D) -> List[LayerMacs]:
    h, w = m.height, m.width
    q = m.count()
    layers = []
    for i, ((c_in, c_out), block) in enumerate(zip(spec.block_channels(), spec.body.blocks)):
        layers.append(LayerMacs(
            name=f"body.{i}",
            dense_macs=macs_conv("3x3", c_in, c_out, h, w),
            sparse_macs=macs_masked_conv(c_in, c_out, q),
            overhead_ops=cnn_overhead_ops(c_in, c_out, q, block.activation)
        ))
    return layers

def _stl_body(spec: ModelSpec, mw: WindowDecision) -> List[LayerMacs]:
    body = spec.body
    total = mw.rows * mw.cols
    kept = mw.kept()
    return [
        LayerMacs(
            name=f"body.{i}",
            dense_macs=macs_stl(spec.channels, body.heads, body.hidden, body.win, total),
            sparse_macs=macs_stl(spec.channels, body.heads, body.hidden, body.win, kept),
            overhead_ops=stl_overhead_ops(spec.channels, body.heads, body.hidden, body.win, kept)
        )
        for i in range(body.layers)
    ]

def report(spec: ModelSpec, m: Union[BitMask2D, WindowDecision],
           image_hw: Optional[Tuple[int, int]] = None,
           sigma: float = AppSettings.DEFAULT_SIGMA,
           q: Optional[int] = None) -> FlopsReport:
    """Per-layer and aggregate dense / sparse counts for one LR image.

    CNN specs take a pixel mask. Transformer specs take either a window decision or a pixel
    mask, which is padded to window multiples and thresholded at sigma.
    """
    if isinstance(m, BitMask2D):
        hw = (m.height, m.width)
        if image_hw is not None and tuple(image_hw) != hw:
            raise ShapeMismatchError(f"Mask {hw} does not match image {tuple(image_hw)}")
        image_hw = hw
    elif image_hw is None:
        image_hw = (m.rows * m.win, m.cols * m.win)
    h, w = image_hw

    total_windows = kept_windows = 0
    if isinstance(spec.body, CnnBodySpec):
        if not isinstance(m, BitMask2D):
            raise ShapeMismatchError("CNN bodies are accounted with a pixel mask, not a window decision")
        body = _cnn_body(spec, m)
        q = m.count()
    elif isinstance(spec.body, StlBodySpec):
        win = spec.body.win
        if isinstance(m, BitMask2D):
            q = m.count()
            m = window_decision(pad_mask(m, win), win, sigma)
        expected = (-(-h // win), -(-w // win))
        if m.win != win or (m.rows, m.cols) != expected:
            raise ShapeMismatchError(
                f"Window decision {m.rows}x{m.cols} (win {m.win}) does not cover a {h}x{w} image with win {win}"
            )
        body = _stl_body(spec, m)
        total_windows, kept_windows = m.rows * m.cols, m.kept()
        if q is None:
            q = kept_windows * win * win

    head, tail = head_tail_layers(spec, h, w)
    result = FlopsReport(
        model=spec.name,
        per_layer=[head] + body + tail,
        head_macs=head.dense_macs,
        body_dense_macs=sum(layer.dense_macs for layer in body),
        body_sparse_macs=sum(layer.sparse_macs for layer in body),
        tail_macs=sum(layer.dense_macs for layer in tail),
        q=q,
        hw=h * w,
        kept_windows=kept_windows,
        total_windows=total_windows
    )
    logger.debug("FLOPs report built", model=spec.name, fraction=result.fraction, body_share=result.body_share)
    return result
