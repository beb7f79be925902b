"""
Bench sweeps - coverage, sparse fraction, fidelity and time per corpus image and setting
"""
import asyncio
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Optional, Union
import pandas as pd
import structlog

from config.settings import AppSettings
from core.image_io import load_image
from core.tensor_core import psnr
from models.model_spec import MaskStrategy, RunConfig
from models.reports import BenchRow
from services.corpus import list_corpus
from services.model_binding import BoundModel
from services.sr_pipeline import super_resolve

logger = structlog.get_logger()

SweepKind = Literal["dilate", "sigma", "strategy"]

@dataclass(frozen=True)
class SweepSetting:
    label: str
    cfg: RunConfig

def sweep_settings(kind: SweepKind, base: Optional[RunConfig] = None) -> List[SweepSetting]:
    """Settings of one sweep in reporting order; other options come from base"""
    base = base or RunConfig()
    if kind == "dilate":
        return [SweepSetting(f"k={k}", base.model_copy(update={"dilation_k": k}))
                for k in AppSettings.DILATION_SWEEP]
    if kind == "sigma":
        return [SweepSetting(f"sigma={s:g}",
                             base.model_copy(update={"sigma": s, "dilation_k": AppSettings.SIGMA_SWEEP_DILATION}))
                for s in AppSettings.SIGMA_SWEEP]
    if kind == "strategy":
        return [SweepSetting(text, base.model_copy(update={"mask_strategy": MaskStrategy.parse(text),
                                                           "dilation_k": AppSettings.STRATEGY_SWEEP_DILATION}))
                for text in AppSettings.STRATEGY_SWEEP]
    raise ValueError(f"Unknown sweep '{kind}'")

def bench_image(path: Path, model: BoundModel, settings: List[SweepSetting]) -> List[BenchRow]:
    """One dense reference run, then every setting on the same image"""
    lr = load_image(path)
    dense = super_resolve(lr, model, RunConfig(mode="dense")).sr
    rows = []
    for setting in settings:
        result = super_resolve(lr, model, setting.cfg)
        rows.append(BenchRow(
            image=path.name,
            setting=setting.label,
            coverage=result.body_mask.coverage(),
            fraction=result.report.fraction,
            psnr_vs_dense=psnr(result.sr, dense),
            ms=result.ms
        ))
    logger.info("Bench image finished", image=path.name, settings=len(settings))
    return rows

async def _run_concurrent(paths: List[Path], model: BoundModel, settings: List[SweepSetting],
                          threads: int) -> List[BenchRow]:
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        tasks = [loop.run_in_executor(pool, bench_image, path, model, settings) for path in paths]
        # gather keeps submission order, so rows come out image-then-setting
        per_image = await asyncio.gather(*tasks)
    return [row for rows in per_image for row in rows]

def bench_sweep(model: BoundModel, corpus_dir: Union[str, Path], sweep: SweepKind,
                threads: Optional[int] = None, base: Optional[RunConfig] = None) -> pd.DataFrame:
    """Run a sweep over every corpus image; images run concurrently, each sequentially"""
    paths = list_corpus(corpus_dir)
    settings = sweep_settings(sweep, base)
    if sweep == "sigma" and model.spec.body_type != "stl":
        logger.warning("Sigma sweep on a CNN body; sigma has no effect", model=model.spec.name)

    workers = AppSettings.bench_threads(threads)
    logger.info("Bench started", model=model.spec.name, sweep=sweep, images=len(paths),
                settings=len(settings), threads=workers)
    rows = asyncio.run(_run_concurrent(paths, model, settings, workers))
    return pd.DataFrame([row.model_dump() for row in rows], columns=AppSettings.BENCH_CSV_COLUMNS)

def summarize(frame: pd.DataFrame) -> pd.DataFrame:
    """Mean coverage and fraction per setting, in sweep order"""
    return (frame.groupby("setting", sort=False)[["coverage", "fraction"]]
            .mean()
            .reset_index())

def bench_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format="%.6f", lineterminator="\n")

def write_bench_csv(frame: pd.DataFrame, path: Union[str, Path]):
    Path(path).write_text(bench_csv(frame), encoding="utf-8")
