# src/models/morphable.py
from typing import Literal, get_args

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

RegionName = Literal["head", "face", "upper", "full", "face_and_neck", "superhero", "frontal"]
REGION_NAMES: tuple[str, ...] = get_args(RegionName)

# Joint order of the kinematic chain
JOINT_NAMES: tuple[str, ...] = ("root", "neck", "head", "jaw")
ROOT, NECK, HEAD, JAW = range(4)

MODEL_FORMAT_VERSION = 1


def _frozen(a, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.flags.writeable = False
    return arr


class RegionMask(BaseModel):
    """Named vertex subset of the model topology"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: RegionName
    indices: np.ndarray

    @field_validator("indices", mode="before")
    @classmethod
    def validate_indices(cls, v) -> np.ndarray:
        idx = np.asarray(v, dtype=np.int64)
        if idx.ndim != 1 or idx.size == 0:
            raise ValueError("region mask must be a nonempty 1-D index list")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("region mask indices must be sorted and unique")
        return _frozen(idx, np.int64)

    def __len__(self) -> int:
        return int(self.indices.size)


class ModelParams(BaseModel):
    """Theta = (identity beta, expression phi, joint rotations theta, root translation tau)"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    beta: np.ndarray
    phi: np.ndarray
    theta: np.ndarray  # (K, 3) angle-axis, radians
    tau: np.ndarray  # (3,) millimeters

    @field_validator("beta", "phi", mode="before")
    @classmethod
    def validate_vector(cls, v) -> np.ndarray:
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"expected a vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("parameters must be finite")
        return _frozen(arr)

    @field_validator("theta", mode="before")
    @classmethod
    def validate_theta(cls, v) -> np.ndarray:
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"theta must be (K, 3), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("parameters must be finite")
        return _frozen(arr)

    @field_validator("tau", mode="before")
    @classmethod
    def validate_tau(cls, v) -> np.ndarray:
        arr = np.asarray(v, dtype=np.float64)
        if arr.shape != (3,):
            raise ValueError(f"tau must be a 3-vector, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("parameters must be finite")
        return _frozen(arr)

    @classmethod
    def zeros(cls, n_identity: int, n_expression: int, n_joints: int = 4) -> "ModelParams":
        return cls(
            beta=np.zeros(n_identity),
            phi=np.zeros(n_expression),
            theta=np.zeros((n_joints, 3)),
            tau=np.zeros(3),
        )

    def replace(self, **changes) -> "ModelParams":
        """Copy with some fields swapped (validated)."""
        data = {"beta": self.beta, "phi": self.phi, "theta": self.theta, "tau": self.tau}
        data.update(changes)
        return ModelParams(**data)


class ModelData(BaseModel):
    """Psi: everything the forward model needs, immutable after construction.

    Shapes (N = vertex count, K = joints, W = skull points):
      template (4, N), joints (4, K), identity_basis (|beta|, 4, N),
      expression_basis (|phi|, 4, N), joint_identity_basis (|beta|, 4, K),
      skinning_weights (K, N), parents (K,), skull (4, W), faces (F, 3).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    template: np.ndarray
    joints: np.ndarray
    identity_basis: np.ndarray
    expression_basis: np.ndarray
    joint_identity_basis: np.ndarray
    skinning_weights: np.ndarray
    parents: np.ndarray
    skull: np.ndarray
    faces: np.ndarray
    masks: dict[str, np.ndarray]
    cranium: np.ndarray
    seed: int = 0

    @field_validator(
        "template",
        "joints",
        "identity_basis",
        "expression_basis",
        "joint_identity_basis",
        "skinning_weights",
        "skull",
        mode="before",
    )
    @classmethod
    def freeze_float(cls, v) -> np.ndarray:
        return _frozen(v)

    @field_validator("parents", "faces", "cranium", mode="before")
    @classmethod
    def freeze_int(cls, v) -> np.ndarray:
        return _frozen(v, np.int64)

    @field_validator("masks", mode="before")
    @classmethod
    def freeze_masks(cls, v) -> dict[str, np.ndarray]:
        return {str(k): _frozen(idx, np.int64) for k, idx in dict(v).items()}

    @model_validator(mode="after")
    def check_invariants(self) -> "ModelData":
        n = self.n_vertices
        k = self.n_joints
        if self.template.shape != (4, n) or not np.all(self.template[3] == 1.0):
            raise ValueError("template must be a homogeneous (4, N) block")
        if self.joints.shape != (4, k):
            raise ValueError(f"joints must be (4, {k}), got {self.joints.shape}")
        if self.identity_basis.shape[1:] != (4, n):
            raise ValueError("identity basis rows must be (4, N)")
        if self.expression_basis.shape[1:] != (4, n):
            raise ValueError("expression basis rows must be (4, N)")
        if self.joint_identity_basis.shape != (self.n_identity, 4, k):
            raise ValueError("joint identity basis must be (|beta|, 4, K)")
        if self.skinning_weights.shape != (k, n):
            raise ValueError("skinning weights must be (K, N)")
        if np.any(self.skinning_weights < 0) or not np.allclose(
            self.skinning_weights.sum(axis=0), 1.0, atol=1e-9
        ):
            raise ValueError("skinning weights must be nonnegative and sum to 1 per vertex")
        if self.parents[0] != -1 or any(
            not (0 <= self.parents[j] < j) for j in range(1, k)
        ):
            raise ValueError("hierarchy must be a tree rooted at joint 0 with parent < child")
        if self.skull.shape[0] != 4 or not np.all(self.skull[3] == 1.0):
            raise ValueError("skull must be a homogeneous (4, W) block")
        missing = set(REGION_NAMES) - set(self.masks)
        if missing:
            raise ValueError(f"missing region masks: {sorted(missing)}")
        for name, idx in {**self.masks, "cranium": self.cranium}.items():
            if idx.size == 0 or idx.min() < 0 or idx.max() >= n:
                raise ValueError(f"mask '{name}' must be a nonempty subset of [0, N)")
        return self

    @property
    def n_vertices(self) -> int:
        return int(self.template.shape[1])

    @property
    def n_joints(self) -> int:
        return int(self.joints.shape[1])

    @property
    def n_identity(self) -> int:
        return int(self.identity_basis.shape[0])

    @property
    def n_expression(self) -> int:
        return int(self.expression_basis.shape[0])

    def zero_params(self) -> ModelParams:
        return ModelParams.zeros(self.n_identity, self.n_expression, self.n_joints)
