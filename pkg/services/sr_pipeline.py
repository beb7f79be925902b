"""
Super-resolution pipeline - head, masked body, tail, with mask generation and FLOPs reporting
"""
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union
import numpy as np
import structlog

from core.exceptions import InputFormatError
from core.image_io import load_image
from core.tensor_core import (
    ConvWeights3x3,
    MacCounter,
    Tensor,
    clamp01,
    conv3x3,
    gemm1x1,
    pixel_shuffle,
    psnr,
)
from models.model_spec import RunConfig
from models.reports import FlopsReport
from services import flops_accounting
from services.freqmask import BitMask2D, MaskArtifacts, WindowDecision, generate_mask, pad_mask, window_decision
from services.model_binding import BoundModel
from services.sparse_cnn import run_body_cnn
from services.sparse_transformer import run_body_stl, train_infer_gap

logger = structlog.get_logger()

@dataclass(frozen=True)
class SrResult:
    """Output image plus everything a caller needs to audit the run"""
    sr: Tensor
    features: Tensor
    body: Tensor
    report: FlopsReport
    masks: MaskArtifacts
    body_mask: BitMask2D
    window_decision: Optional[WindowDecision]
    counter: MacCounter
    ms: float
    gap: Optional[float] = None

def pad_features(f: Tensor, win: int) -> Tensor:
    """Zero-pad bottom and right to multiples of win"""
    pad_h = (-f.height) % win
    pad_w = (-f.width) % win
    if not pad_h and not pad_w:
        return f
    return Tensor(np.pad(f.data, ((0, 0), (0, pad_h), (0, pad_w))))

def crop_features(f: Tensor, height: int, width: int) -> Tensor:
    if (f.height, f.width) == (height, width):
        return f
    return Tensor(f.data[:, :height, :width])

def run_tail(d: Tensor, model: BoundModel) -> Tensor:
    """conv (3x3 or 1x1) -> pixel_shuffle -> optional final 3x3 conv"""
    if isinstance(model.tail_conv, ConvWeights3x3):
        y = conv3x3(d, model.tail_conv)
    else:
        y = gemm1x1(d, model.tail_conv)
    y = pixel_shuffle(y, model.spec.scale)
    if model.tail_final is not None:
        y = conv3x3(y, model.tail_final)
    return y

def check_lr(lr: Tensor):
    if lr.channels != 3:
        raise InputFormatError(f"LR input must have 3 channels, got {lr.channels}")
    if lr.data.min() < 0.0 or lr.data.max() > 1.0:
        raise InputFormatError("LR input values must lie in [0, 1]")

def super_resolve(lr: Tensor, model: BoundModel, cfg: Optional[RunConfig] = None,
                  measure_gap: bool = False) -> SrResult:
    """Run one LR image through head, masked body and tail.

    The mask is computed once at LR resolution. CNN bodies consume it per pixel; Transformer
    bodies consume the window decision derived from it, on features zero-padded to window
    multiples and cropped back afterwards. Dense mode processes every position.
    """
    cfg = cfg or RunConfig()
    check_lr(lr)
    spec = model.spec
    start_time = time.perf_counter()

    masks = generate_mask(lr, cfg.mask_strategy, cfg.resolved_dilation(spec), cfg.kmeans_max_iter)
    h, w = lr.height, lr.width
    body_mask = BitMask2D.ones(h, w) if cfg.mode == "dense" else masks.mask
    counter = MacCounter()

    f = conv3x3(lr, model.head)
    mw = None
    gap = None
    if spec.body_type == "cnn":
        d = run_body_cnn(f, model.blocks, body_mask, "infer", cfg.neighbor_policy, counter)
        report = flops_accounting.report(spec, body_mask)
    else:
        win = spec.win
        padded = pad_mask(body_mask, win)
        if cfg.mode == "dense":
            mw = WindowDecision.all_kept(padded.height // win, padded.width // win, win)
        else:
            mw = window_decision(padded, win, cfg.sigma)
        fp = pad_features(f, win)
        d = crop_features(run_body_stl(fp, model.layers, mw, "infer", counter), h, w)
        report = flops_accounting.report(spec, mw, image_hw=(h, w), q=body_mask.count())
        if measure_gap:
            gap = train_infer_gap(fp, model.layers, mw)
            logger.info("Train/infer gap measured", model=spec.name, gap=gap, kept_windows=mw.kept())

    body = d
    if spec.global_residual:
        d = Tensor(d.data + f.data)
    sr = clamp01(run_tail(d, model))
    ms = (time.perf_counter() - start_time) * 1000.0

    logger.info("Super-resolution completed",
                model=spec.name,
                mode=cfg.mode,
                coverage=round(body_mask.coverage(), 6),
                kept_windows=mw.kept() if mw is not None else None,
                fraction=round(report.fraction, 6),
                ms=round(ms, 3))
    return SrResult(sr=sr, features=f, body=body, report=report, masks=masks, body_mask=body_mask,
                    window_decision=mw, counter=counter, ms=ms, gap=gap)

def psnr_compare(a_path: Union[str, Path], b_path: Union[str, Path]) -> float:
    """PSNR (peak 1.0, RGB, no crop) between two image files"""
    return psnr(load_image(a_path), load_image(b_path), peak=1.0)
