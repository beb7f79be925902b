"""
Windowed Transformer body - window-gated training forward and token-pruned inference forward.

Attention never crosses non-overlapping windows, so dropping pruned windows before
LN / MSA / MLP leaves the kept windows' results unchanged.
"""
import math
from dataclasses import dataclass
from typing import List, Literal, Optional
import numpy as np
import structlog
from scipy.special import erf

from config.settings import AppSettings
from core.exceptions import ShapeMismatchError
from core.tensor_core import MacCounter, Tensor
from services.freqmask import WindowDecision

logger = structlog.get_logger()

Mode = Literal["train", "infer"]

@dataclass(frozen=True)
class StlWeights:
    """LN -> window MSA -> residual, LN -> MLP -> residual"""
    dim: int
    heads: int
    win: int
    qkv_w: np.ndarray
    qkv_b: np.ndarray
    proj_w: np.ndarray
    proj_b: np.ndarray
    ln1_g: np.ndarray
    ln1_b: np.ndarray
    ln2_g: np.ndarray
    ln2_b: np.ndarray
    fc1_w: np.ndarray
    fc1_b: np.ndarray
    fc2_w: np.ndarray
    fc2_b: np.ndarray

    def __post_init__(self):
        if self.dim % self.heads:
            raise ShapeMismatchError(f"dim {self.dim} is not divisible by {self.heads} heads")
        if self.win < 1:
            raise ShapeMismatchError(f"Window side must be positive, got {self.win}")
        c = self.dim
        hidden = np.asarray(self.fc1_w).shape[0]
        expected = {
            "qkv_w": (3 * c, c), "qkv_b": (3 * c,),
            "proj_w": (c, c), "proj_b": (c,),
            "ln1_g": (c,), "ln1_b": (c,), "ln2_g": (c,), "ln2_b": (c,),
            "fc1_w": (hidden, c), "fc1_b": (hidden,),
            "fc2_w": (c, hidden), "fc2_b": (c,),
        }
        if hidden < 1:
            raise ShapeMismatchError("MLP hidden width must be at least 1")
        for name, shape in expected.items():
            arr = np.array(getattr(self, name), dtype=np.float32, copy=True)
            if arr.shape != shape:
                raise ShapeMismatchError(f"{name} must have shape {shape}, got {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def hidden(self) -> int:
        return self.fc1_w.shape[0]

    @property
    def head_dim(self) -> int:
        return self.dim // self.heads

@dataclass(frozen=True)
class TokenBatch:
    """Window tokens [n, win^2, C] with their (row, col) window-grid origins"""
    tokens: np.ndarray
    origins: np.ndarray
    rows: int
    cols: int
    win: int

    @property
    def n_windows(self) -> int:
        return self.tokens.shape[0]

    def select(self, indices: np.ndarray) -> "TokenBatch":
        return TokenBatch(self.tokens[indices], self.origins[indices], self.rows, self.cols, self.win)

def window_partition(f: Tensor, win: int) -> TokenBatch:
    """Row-major windows, row-major pixels inside a window, channels last"""
    c, h, w = f.shape
    if win < 1 or h % win or w % win:
        raise ShapeMismatchError(f"Features {h}x{w} are not divisible into {win}x{win} windows")
    rows, cols = h // win, w // win
    tokens = (f.data.reshape(c, rows, win, cols, win)
              .transpose(1, 3, 2, 4, 0)
              .reshape(rows * cols, win * win, c))
    origins = np.stack(np.divmod(np.arange(rows * cols), cols), axis=1)
    return TokenBatch(tokens=tokens.copy(), origins=origins, rows=rows, cols=cols, win=win)

def window_merge(tb: TokenBatch, height: int, width: int) -> Tensor:
    """Inverse of window_partition; every window of the grid must be present"""
    if (tb.rows * tb.win, tb.cols * tb.win) != (height, width):
        raise ShapeMismatchError(
            f"Window grid {tb.rows}x{tb.cols} of side {tb.win} does not tile {height}x{width}"
        )
    if tb.n_windows != tb.rows * tb.cols:
        raise ShapeMismatchError(f"Merge needs {tb.rows * tb.cols} windows, got {tb.n_windows}")
    return window_scatter(np.zeros((tb.tokens.shape[2], height, width), dtype=np.float32), tb)

def window_scatter(base: np.ndarray, tb: TokenBatch) -> Tensor:
    """Write tokens back into a (C, H, W) base at their window origins"""
    c = base.shape[0]
    out = base.reshape(c, tb.rows, tb.win, tb.cols, tb.win).transpose(1, 3, 2, 4, 0).copy()
    out[tb.origins[:, 0], tb.origins[:, 1]] = tb.tokens.reshape(-1, tb.win, tb.win, c)
    merged = out.transpose(4, 0, 2, 1, 3).reshape(c, tb.rows * tb.win, tb.cols * tb.win)
    return Tensor(merged)

def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray,
               eps: float = AppSettings.LAYER_NORM_EPS) -> np.ndarray:
    """Per-token normalization over the last (channel) axis"""
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=-1, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + eps) * np.asarray(gamma, dtype=np.float64) + np.asarray(beta, dtype=np.float64)

def gelu(x: np.ndarray) -> np.ndarray:
    """Exact erf form"""
    return 0.5 * x * (1.0 + erf(x / math.sqrt(2.0)))

def _linear(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    return x @ weight.astype(np.float64).T + bias.astype(np.float64)

def softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)

def _split_heads(x: np.ndarray, w: StlWeights):
    """(n, N, 3C) -> q, k, v of shape (n, heads, N, head_dim)"""
    n, tokens, _ = x.shape
    qkv = x.reshape(n, tokens, 3, w.heads, w.head_dim).transpose(2, 0, 3, 1, 4)
    return qkv[0], qkv[1], qkv[2]

def attention_probs(x: np.ndarray, w: StlWeights) -> np.ndarray:
    """Softmax attention weights (n, heads, N, N) of already-normalized tokens"""
    q, k, _ = _split_heads(_linear(x, w.qkv_w, w.qkv_b), w)
    return softmax((q @ k.transpose(0, 1, 3, 2)) / math.sqrt(w.head_dim))

def _msa(x: np.ndarray, w: StlWeights, counter: Optional[MacCounter], layer: str) -> np.ndarray:
    n, tokens, c = x.shape
    q, k, v = _split_heads(_linear(x, w.qkv_w, w.qkv_b), w)
    attn = softmax((q @ k.transpose(0, 1, 3, 2)) / math.sqrt(w.head_dim))
    out = (attn @ v).transpose(0, 2, 1, 3).reshape(n, tokens, c)
    out = _linear(out, w.proj_w, w.proj_b)
    if counter is not None:
        counter.add(n * (3 * tokens * c * c), f"{layer}.qkv")
        counter.add(n * (2 * w.heads * tokens * tokens * w.head_dim), f"{layer}.attn")
        counter.add(n * (tokens * c * c), f"{layer}.proj")
    return out

def _mlp(x: np.ndarray, w: StlWeights, counter: Optional[MacCounter], layer: str) -> np.ndarray:
    n, tokens, c = x.shape
    out = _linear(gelu(_linear(x, w.fc1_w, w.fc1_b)), w.fc2_w, w.fc2_b)
    if counter is not None:
        counter.add(n * (2 * tokens * c * w.hidden), f"{layer}.mlp")
    return out

def window_msa(tb: TokenBatch, w: StlWeights, counter: Optional[MacCounter] = None) -> TokenBatch:
    """Per-window multi-head softmax attention plus output projection; no shift, no position bias"""
    out = _msa(tb.tokens.astype(np.float64), w, counter, "msa")
    return TokenBatch(out.astype(np.float32), tb.origins, tb.rows, tb.cols, tb.win)

def _block(tokens: np.ndarray, w: StlWeights, keep: Optional[np.ndarray],
           counter: Optional[MacCounter], layer: str) -> np.ndarray:
    """Pre-norm block on (n, N, C) float64 tokens; keep multiplies each window's tokens when given"""
    gate = (lambda x: x) if keep is None else (lambda x: x * keep[:, None, None])
    mid = _msa(layer_norm(gate(tokens), w.ln1_g, w.ln1_b), w, counter, layer) + tokens
    return _mlp(layer_norm(gate(mid), w.ln2_g, w.ln2_b), w, counter, layer) + mid

def _check_grid(f: Tensor, w: StlWeights, mw: WindowDecision):
    if f.channels != w.dim:
        raise ShapeMismatchError(f"STL layer expects {w.dim} channels, got {f.channels}")
    if mw.win != w.win or (mw.rows * w.win, mw.cols * w.win) != (f.height, f.width):
        raise ShapeMismatchError(
            f"Window decision {mw.rows}x{mw.cols} (win {mw.win}) does not match features "
            f"{f.height}x{f.width} partitioned by {w.win}"
        )

def stl_forward_train(f: Tensor, w: StlWeights, mw: WindowDecision,
                      counter: Optional[MacCounter] = None, layer: str = "body") -> Tensor:
    """f_mid = MSA(LN(f * m_win)) + f;  f_out = MLP(LN(f_mid * m_win)) + f_mid"""
    _check_grid(f, w, mw)
    tb = window_partition(f, w.win)
    keep = mw.bits.ravel().astype(np.float64)
    out = _block(tb.tokens.astype(np.float64), w, keep, counter, layer)
    return window_merge(TokenBatch(out.astype(np.float32), tb.origins, tb.rows, tb.cols, tb.win),
                        f.height, f.width)

def stl_forward_infer(f: Tensor, w: StlWeights, mw: WindowDecision,
                      counter: Optional[MacCounter] = None, layer: str = "body") -> Tensor:
    """Prune windows with m_win = 0, run kept windows, scatter them back"""
    _check_grid(f, w, mw)
    kept = mw.kept_indices()
    if kept.size == 0:
        return f
    sub = window_partition(f, w.win).select(kept)
    out = _block(sub.tokens.astype(np.float64), w, None, counter, layer)
    processed = TokenBatch(out.astype(np.float32), sub.origins, sub.rows, sub.cols, sub.win)
    return window_scatter(f.data, processed)

def run_body_stl(f: Tensor, layers: List[StlWeights], mw: WindowDecision, mode: Mode = "infer",
                 counter: Optional[MacCounter] = None) -> Tensor:
    """Apply layers in order under one shared window decision"""
    wins = {layer.win for layer in layers}
    if len(wins) > 1:
        raise ShapeMismatchError(f"STL layers use mixed window sizes {sorted(wins)}")

    forward = stl_forward_train if mode == "train" else stl_forward_infer
    g = f
    for i, layer in enumerate(layers):
        g = forward(g, layer, mw, counter, layer=f"body.{i}")

    logger.debug("STL body finished", mode=mode, layers=len(layers), kept_windows=mw.kept())
    return g

def train_infer_gap(f: Tensor, layers: List[StlWeights], mw: WindowDecision) -> float:
    """Max |train - infer| over pruned windows (0.0 when nothing is pruned)"""
    if not layers or mw.kept() == mw.bits.size:
        return 0.0
    train = run_body_stl(f, layers, mw, "train").data
    infer = run_body_stl(f, layers, mw, "infer").data
    pruned = np.kron(~mw.bits, np.ones((mw.win, mw.win), dtype=np.bool_))
    return float(np.abs(train - infer)[:, pruned].max())
