# src/models/baselines.py
import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from src.models.morphable import RegionName


class ConfidenceMap(BaseModel):
    """Per-vertex Procrustes weights in [0, 1] over one region"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    region: RegionName
    weights: np.ndarray
    variant: str = "uniform"

    @field_validator("weights", mode="before")
    @classmethod
    def validate_weights(cls, v) -> np.ndarray:
        w = np.array(v, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("confidence map must be a nonempty vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("confidence map must be finite")
        w = np.clip(w, 0.0, 1.0)
        w.flags.writeable = False
        return w

    def __len__(self) -> int:
        return int(self.weights.size)


class CmapLosses(BaseModel):
    """The four confidence-map energy terms (unweighted)"""

    data: float
    reg: float
    sigma: float
    nbhd: float
