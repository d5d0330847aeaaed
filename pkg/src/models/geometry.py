# src/models/geometry.py
import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

RIGID_TOLERANCE = 1e-6


class RigidTransform(BaseModel):
    """4x4 homogeneous rigid map (rotation + translation, millimeters).

    Vertex blocks are plain ``(4, N)`` float64 arrays whose fourth row is
    all ones; a transform acts on them by left multiplication.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def validate_matrix(cls, v) -> np.ndarray:
        m = np.array(v, dtype=np.float64)
        if m.shape != (4, 4):
            raise ValueError(f"rigid transform must be 4x4, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("rigid transform contains non-finite values")
        if not np.array_equal(m[3], [0.0, 0.0, 0.0, 1.0]):
            raise ValueError(f"bottom row must be exactly (0, 0, 0, 1), got {m[3].tolist()}")
        r = m[:3, :3]
        if not np.allclose(r.T @ r, np.eye(3), atol=RIGID_TOLERANCE):
            raise ValueError("rotation block is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > RIGID_TOLERANCE:
            raise ValueError("rotation block must have determinant +1")
        m.flags.writeable = False
        return m

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(matrix=np.eye(4))

    @classmethod
    def from_parts(cls, rotation: np.ndarray, translation: np.ndarray) -> "RigidTransform":
        m = np.eye(4)
        m[:3, :3] = rotation
        m[:3, 3] = translation
        return cls(matrix=m)

    @classmethod
    def from_translation(cls, translation) -> "RigidTransform":
        return cls.from_parts(np.eye(3), np.asarray(translation, dtype=np.float64))

    @property
    def rotation(self) -> np.ndarray:
        return self.matrix[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.matrix[:3, 3]
