# src/models/evaluation.py
from pydantic import BaseModel, Field, model_validator


class RegionMetrics(BaseModel):
    """One method on one region"""

    method: str
    region: str
    md_mean: float = Field(ge=0)  # mm
    md_std: float = Field(ge=0)  # mm, pooled over all vertex errors
    mx: float = Field(ge=0)  # mm
    auc: float = Field(ge=0, le=100)  # percent
    pck: list[float]

    @model_validator(mode="after")
    def check_pck(self) -> "RegionMetrics":
        if any(b < a for a, b in zip(self.pck, self.pck[1:])):
            raise ValueError("PCK curve must be non-decreasing")
        if any(not 0.0 <= p <= 1.0 for p in self.pck):
            raise ValueError("PCK values must lie in [0, 1]")
        return self


class SkullSummary(BaseModel):
    """Skull-alignment RMS (mm) against the synthetic skulls"""

    method: str
    mean: float
    median: float
    values: list[float] = []


class EvalReport(BaseModel):
    """Per-method, per-region metrics plus skull summaries"""

    samples: int
    thresholds: list[float]
    rows: list[RegionMetrics]
    skull: list[SkullSummary] = []
    config: dict = {}
    inputs: dict[str, str] = {}

    def row(self, method: str, region: str) -> RegionMetrics:
        for r in self.rows:
            if r.method == method and r.region == region:
                return r
        raise KeyError(f"no row for {method}/{region}")

    def methods(self) -> list[str]:
        return list(dict.fromkeys(r.method for r in self.rows))

    def regions(self) -> list[str]:
        return list(dict.fromkeys(r.region for r in self.rows))


class AblationRow(BaseModel):
    """Validation metrics for one ablation setting"""

    setting: str
    train_samples: int
    md_mean: float
    md_std: float
    mx: float
    auc: float


class AblationReport(BaseModel):
    kind: str
    region: str
    rows: list[AblationRow]
    config: dict = {}
