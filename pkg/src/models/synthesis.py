# src/models/synthesis.py
import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from src.models.geometry import RigidTransform
from src.models.morphable import ModelParams


def _vector(v) -> np.ndarray:
    arr = np.array(v, dtype=np.float64)
    arr.flags.writeable = False
    return arr


class IdentityDistribution(BaseModel):
    """Diagonal normal N(mean, diag(std)) fitted to an identity set"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mean: np.ndarray
    std: np.ndarray

    @field_validator("mean", "std", mode="before")
    @classmethod
    def validate_vector(cls, v) -> np.ndarray:
        return _vector(v)

    @model_validator(mode="after")
    def check_std(self) -> "IdentityDistribution":
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ValueError("mean and std must be vectors of equal length")
        if np.any(self.std < 0):
            raise ValueError("std must be >= 0")
        return self


class ExpressionLibrary(BaseModel):
    """Expression vectors pairs are drawn from"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    entries: np.ndarray  # (count, |phi|)

    @field_validator("entries", mode="before")
    @classmethod
    def validate_entries(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise ValueError("expression library must be a nonempty (count, |phi|) array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("expression library entries must be finite")
        arr.flags.writeable = False
        return arr

    def __len__(self) -> int:
        return int(self.entries.shape[0])


class TrainingSample(BaseModel):
    """Preprocessed source/target blocks (N_C points, mm) plus the ground-truth transform"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    source: np.ndarray
    target: np.ndarray
    gt: RigidTransform
    seed: int

    @field_validator("source", "target", mode="before")
    @classmethod
    def validate_block(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != 4:
            raise ValueError(f"expected a (4, N) block, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("vertex block must be finite")
        arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def check_shapes(self) -> "TrainingSample":
        if self.source.shape != self.target.shape:
            raise ValueError("source and target must have the same point count")
        return self

    @property
    def n_points(self) -> int:
        return int(self.source.shape[1])


class PreAlignment(BaseModel):
    """Masked pair after naive pre-alignment, with the transforms that produced it"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    source: np.ndarray
    target: np.ndarray
    align_source: RigidTransform
    align_target: RigidTransform


class SyntheticPair(BaseModel):
    """Everything known about one synthesized pair.

    Full meshes, parameters and skulls live in the pre-aligned frames, so the
    ground truth maps the source world onto the target world.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    source_full: np.ndarray
    target_full: np.ndarray
    params_source: ModelParams
    params_target: ModelParams
    skull_source: np.ndarray
    skull_target: np.ndarray
    align_source: RigidTransform
    align_target: RigidTransform
    sample: TrainingSample

    @property
    def gt(self) -> RigidTransform:
        return self.sample.gt


class DatasetHeader(BaseModel):
    """Provenance stored next to the packed samples"""

    model_config = ConfigDict(protected_namespaces=())

    count: int
    n_points: int
    mask: str
    units: str = "mm"
    config: dict
    model_digest: str


class Dataset(BaseModel):
    """Packed training samples as loaded from disk"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    header: DatasetHeader
    sources: np.ndarray  # (M, 3, N_C) float32
    targets: np.ndarray  # (M, 3, N_C) float32
    gts: np.ndarray  # (M, 4, 4) float64
    seeds: np.ndarray  # (M,) uint64

    def __len__(self) -> int:
        return int(self.seeds.shape[0])

    def sample(self, i: int) -> TrainingSample:
        ones = np.ones((1, self.sources.shape[2]))
        return TrainingSample(
            source=np.vstack([self.sources[i].astype(np.float64), ones]),
            target=np.vstack([self.targets[i].astype(np.float64), ones]),
            gt=RigidTransform(matrix=self.gts[i]),
            seed=int(self.seeds[i]),
        )

    def samples(self) -> list[TrainingSample]:
        return [self.sample(i) for i in range(len(self))]

    def head(self, count: int) -> "Dataset":
        """First ``count`` samples (same header, adjusted count)."""
        count = min(count, len(self))
        return Dataset(
            header=self.header.model_copy(update={"count": count}),
            sources=self.sources[:count],
            targets=self.targets[:count],
            gts=self.gts[:count],
            seeds=self.seeds[:count],
        )

    @classmethod
    def from_samples(cls, header: DatasetHeader, samples: list[TrainingSample]) -> "Dataset":
        return cls(
            header=header,
            sources=np.stack([s.source[:3] for s in samples]).astype(np.float32),
            targets=np.stack([s.target[:3] for s in samples]).astype(np.float32),
            gts=np.stack([s.gt.matrix for s in samples]),
            seeds=np.array([s.seed for s in samples], dtype=np.uint64),
        )
