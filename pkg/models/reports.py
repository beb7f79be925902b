"""
Pydantic report models - FLOPs accounting and bench rows
"""
from fractions import Fraction
from typing import List
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from config.settings import AppSettings

class LayerMacs(BaseModel):
    """Dense and sparse multiply-adds of one layer"""
    name: str
    dense_macs: int = Field(ge=0)
    sparse_macs: int = Field(ge=0)
    overhead_ops: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def check_sparse_bound(self):
        if self.sparse_macs > self.dense_macs:
            raise ValueError(f"{self.name}: sparse MACs {self.sparse_macs} exceed dense {self.dense_macs}")
        return self

    @property
    def fraction(self) -> float:
        return self.sparse_macs / self.dense_macs if self.dense_macs else 1.0

class FlopsReport(BaseModel):
    """Per-layer and aggregate MAC counts; FLOPs = 2 x MACs"""
    model: str
    per_layer: List[LayerMacs]
    head_macs: int
    body_dense_macs: int
    body_sparse_macs: int
    tail_macs: int
    q: int
    hw: int
    kept_windows: int = 0
    total_windows: int = 0

    @property
    def total_dense(self) -> int:
        return self.head_macs + self.body_dense_macs + self.tail_macs

    @property
    def total_sparse(self) -> int:
        return self.head_macs + self.body_sparse_macs + self.tail_macs

    @property
    def overhead_ops(self) -> int:
        return sum(layer.overhead_ops for layer in self.per_layer)

    @property
    def fraction_exact(self) -> Fraction:
        return Fraction(self.total_sparse, self.total_dense) if self.total_dense else Fraction(1)

    @property
    def fraction(self) -> float:
        return float(self.fraction_exact)

    @property
    def body_share(self) -> float:
        return self.body_dense_macs / self.total_dense if self.total_dense else 0.0

    @property
    def coverage(self) -> float:
        return self.q / self.hw if self.hw else 0.0

    def to_frame(self) -> pd.DataFrame:
        """Rows per layer plus a closing total row"""
        rows = [
            {"layer": layer.name, "dense_macs": layer.dense_macs, "sparse_macs": layer.sparse_macs,
             "fraction": layer.fraction}
            for layer in self.per_layer
        ]
        rows.append({"layer": "total", "dense_macs": self.total_dense, "sparse_macs": self.total_sparse,
                     "fraction": self.fraction})
        return pd.DataFrame(rows, columns=AppSettings.REPORT_CSV_COLUMNS)

    def to_csv(self) -> str:
        return self.to_frame().to_csv(index=False, float_format="%.6f", lineterminator="\n")

    def to_text(self) -> str:
        """Human-readable summary"""
        lines = [f"model: {self.model}"]
        width = max([len(layer.name) for layer in self.per_layer] + [5])
        lines.append(f"{'layer':<{width}}  {'dense_macs':>14}  {'sparse_macs':>14}  {'fraction':>8}")
        for layer in self.per_layer:
            lines.append(
                f"{layer.name:<{width}}  {layer.dense_macs:>14,}  {layer.sparse_macs:>14,}  {layer.fraction:>8.2%}"
            )
        lines.append(f"{'total':<{width}}  {self.total_dense:>14,}  {self.total_sparse:>14,}  {self.fraction:>8.2%}")
        lines.append(f"dense GFLOPs: {2 * self.total_dense / 1e9:.4f}  sparse GFLOPs: {2 * self.total_sparse / 1e9:.4f}")
        lines.append(f"body share: {self.body_share:.2%}  coverage: {self.coverage:.2%}  Q={self.q} HW={self.hw}")
        if self.total_windows:
            lines.append(f"kept windows: {self.kept_windows}/{self.total_windows}")
        lines.append(f"overhead ops (excluded): {self.overhead_ops:,}")
        return "\n".join(lines)

class BenchRow(BaseModel):
    """One image x setting measurement"""
    image: str
    setting: str
    coverage: float
    fraction: float
    psnr_vs_dense: float
    ms: float
