# src/geometry/rigid.py
import numpy as np
from scipy.spatial.transform import Rotation

from src.models.errors import Errors, StabilizerError
from src.models.geometry import RigidTransform


def check_block(v: np.ndarray, name: str = "block") -> np.ndarray:
    """Validate a homogeneous vertex block and return it as float64."""
    b = np.asarray(v, dtype=np.float64)
    if b.ndim != 2 or b.shape[0] != 4 or b.shape[1] == 0:
        raise StabilizerError(
            Errors.SHAPE_MISMATCH, f"{name} must be a (4, N) block, got {b.shape}", shape=b.shape
        )
    if not np.all(b[3] == 1.0):
        raise StabilizerError(Errors.SHAPE_MISMATCH, f"{name} fourth row must be all ones")
    return b


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """a . b (apply b first)."""
    return RigidTransform(matrix=a.matrix @ b.matrix)


def invert(s: RigidTransform) -> RigidTransform:
    r_t = s.rotation.T
    return RigidTransform.from_parts(r_t, -r_t @ s.translation)


def apply(s: RigidTransform, v: np.ndarray) -> np.ndarray:
    """Transform a homogeneous block; the fourth row stays exactly one."""
    return s.matrix @ v


def angle_axis_to_matrix(alpha: float, axis) -> np.ndarray:
    """Rotation by ``alpha`` radians about ``axis`` (normalized internally)."""
    a = np.asarray(axis, dtype=np.float64)
    norm = np.linalg.norm(a)
    if a.shape != (3,) or norm == 0.0 or not np.isfinite(norm):
        raise StabilizerError(
            Errors.DEGENERATE_GEOMETRY, "rotation axis must be a nonzero 3-vector", axis=a.tolist()
        )
    return Rotation.from_rotvec(float(alpha) * a / norm).as_matrix()


def rotation_angle(rotation: np.ndarray) -> float:
    """Geodesic angle of a rotation matrix, radians in [0, pi]."""
    return float(Rotation.from_matrix(np.array(rotation, dtype=np.float64)).magnitude())


def sample_random_rigid(eps_r: float, eps_t: float, rng: np.random.Generator) -> RigidTransform:
    """Random rigid transform: angle ~ N(0, eps_r) about a U(-1, 1)^3 axis,
    translation ~ N(0, eps_t) per component.
    """
    if eps_r < 0 or eps_t < 0:
        raise StabilizerError(
            Errors.INVALID_CONFIG, "noise scales must be >= 0", eps_r=eps_r, eps_t=eps_t
        )
    alpha = rng.normal(0.0, eps_r)
    axis = rng.uniform(-1.0, 1.0, size=3)
    while not np.any(axis):
        axis = rng.uniform(-1.0, 1.0, size=3)
    translation = rng.normal(0.0, eps_t, size=3)
    return RigidTransform.from_parts(angle_axis_to_matrix(alpha, axis), translation)
