# src/models/predictor.py
import numpy as np
from pydantic import BaseModel, ConfigDict

from src.config import PredictorConfig
from src.models.morphable import RegionName

CHECKPOINT_FORMAT_VERSION = 1


class PredictorWeights(BaseModel):
    """Omega: layer parameters of the feature extractor F and regressor R plus Adam state.

    ``weights``/``biases`` list the extractor layers first, then the regressor
    layers; weight matrices are (out, in). Adam moments follow the order of
    ``parameters()``.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, protected_namespaces=())

    config: PredictorConfig
    input_dim: int
    mask: RegionName
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    adam_m: list[np.ndarray]
    adam_v: list[np.ndarray]
    iteration: int = 0
    model_digest: str = ""
    dataset_digest: str = ""

    @property
    def n_extractor_layers(self) -> int:
        return len(self.config.extractor_sizes) + 1

    @property
    def n_points(self) -> int:
        return self.input_dim // 3

    def parameters(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.parameters())


class PoseLoss(BaseModel):
    """Batch-mean loss and its two terms"""

    total: float
    rotation: float
    translation: float


class TrainingLogRecord(BaseModel):
    """One line of the training log"""

    iteration: int
    loss: float
    loss_rotation: float
    loss_translation: float
    validation_md: float | None = None
