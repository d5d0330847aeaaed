# src/geometry/procrustes.py
import numpy as np

from src.geometry.rigid import apply, check_block
from src.models.errors import Errors, StabilizerError
from src.models.geometry import RigidTransform

RANK_TOLERANCE = 1e-12


def _kabsch(p: np.ndarray, q: np.ndarray, weights: np.ndarray) -> RigidTransform:
    """Minimize sum_i weights_i * |R p_i + t - q_i|^2 over rigid (R, t).

    p, q: (3, N) Cartesian points; weights: (N,) nonnegative with positive sum.
    """
    total = weights.sum()
    cp = p @ weights / total
    cq = q @ weights / total
    pc = p - cp[:, None]
    qc = q - cq[:, None]
    h = (pc * weights) @ qc.T
    u, s, vt = np.linalg.svd(h)
    if s[0] <= 0.0 or s[1] <= RANK_TOLERANCE * s[0]:
        raise StabilizerError(
            Errors.DEGENERATE_GEOMETRY,
            "Procrustes cross-covariance is rank deficient (points collinear or coincident)",
            singular_values=s.tolist(),
        )
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d == 0.0:
        d = 1.0
    correction = np.diag([1.0, 1.0, d])
    r = vt.T @ correction @ u.T
    return RigidTransform.from_parts(r, cq - r @ cp)


def _check_pair(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = check_block(x, "source")
    y = check_block(y, "target")
    if x.shape != y.shape:
        raise StabilizerError(
            Errors.SHAPE_MISMATCH,
            f"point counts differ: {x.shape[1]} vs {y.shape[1]}",
            source=x.shape[1],
            target=y.shape[1],
        )
    if x.shape[1] < 3:
        raise StabilizerError(
            Errors.DEGENERATE_GEOMETRY, "Procrustes needs at least 3 points", count=x.shape[1]
        )
    return x, y


def procrustes_transform(x: np.ndarray, y: np.ndarray) -> RigidTransform:
    """Rigid transform S minimizing |S x - y|_F (no scale, no reflection)."""
    x, y = _check_pair(x, y)
    return _kabsch(x[:3], y[:3], np.ones(x.shape[1]))


def procrustes_align(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """x moved onto y by its Procrustes transform."""
    return apply(procrustes_transform(x, y), x)


def weighted_procrustes(us: np.ndarray, ut: np.ndarray, w) -> RigidTransform:
    """Rigid fit on weighted homogeneous blocks W . U with W = [1,1,1,1]^T w^T.

    A rigid S commutes with per-column scaling, so |S (W . Us) - W . Ut|_F^2
    equals sum_i w_i^2 |S us_i - ut_i|^2: the fit is a weighted Kabsch with
    weights w^2, and zero-weight vertices drop out entirely.
    """
    us, ut = _check_pair(us, ut)
    weights = np.asarray(w, dtype=np.float64)
    if weights.shape != (us.shape[1],):
        raise StabilizerError(
            Errors.SHAPE_MISMATCH,
            f"expected {us.shape[1]} weights, got {weights.shape}",
        )
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise StabilizerError(Errors.INVALID_DATA_FORMAT, "weights must be finite and >= 0")
    squared = weights**2
    if not np.any(squared > 0):
        raise StabilizerError(Errors.DEGENERATE_GEOMETRY, "all Procrustes weights are zero")
    return _kabsch(us[:3], ut[:3], squared)


def weighted_residuals(s: RigidTransform, us: np.ndarray, ut: np.ndarray) -> np.ndarray:
    """Per-vertex squared distances |S us_i - ut_i|^2."""
    diff = apply(s, us)[:3] - ut[:3]
    return np.sum(diff * diff, axis=0)
