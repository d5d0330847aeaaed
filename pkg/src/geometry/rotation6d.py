# src/geometry/rotation6d.py
"""Continuous 6D rotation representation.

A rotation is encoded by its first two columns (column-major, 6 numbers) and
decoded by Gram-Schmidt orthonormalization; the third column is the cross
product. The batched decode keeps the intermediates needed for backprop.
"""

from dataclasses import dataclass

import numpy as np

from src.models.errors import Errors, StabilizerError

DEGENERACY_TOLERANCE = 1e-12


def rot6d_encode(rotation: np.ndarray) -> np.ndarray:
    r = np.asarray(rotation, dtype=np.float64)
    return np.concatenate([r[:, 0], r[:, 1]])


@dataclass
class DecodeCache:
    a1: np.ndarray
    a2: np.ndarray
    n1: np.ndarray
    b1: np.ndarray
    nu: np.ndarray
    b2: np.ndarray
    b3: np.ndarray


def decode_batch(raw: np.ndarray) -> tuple[np.ndarray, DecodeCache]:
    """(B, 6) -> (B, 3, 3) rotations plus the backward cache."""
    a1 = raw[:, :3]
    a2 = raw[:, 3:6]
    n1 = np.linalg.norm(a1, axis=1, keepdims=True)
    if np.any(n1 <= DEGENERACY_TOLERANCE):
        raise StabilizerError(
            Errors.DEGENERATE_GEOMETRY,
            "6D rotation has a zero first column",
            rows=np.flatnonzero(n1[:, 0] <= DEGENERACY_TOLERANCE).tolist(),
        )
    b1 = a1 / n1
    u = a2 - np.sum(b1 * a2, axis=1, keepdims=True) * b1
    nu = np.linalg.norm(u, axis=1, keepdims=True)
    scale = np.maximum(np.linalg.norm(a2, axis=1, keepdims=True), 1.0)
    if np.any(nu <= DEGENERACY_TOLERANCE * scale):
        raise StabilizerError(
            Errors.DEGENERATE_GEOMETRY,
            "6D rotation columns are parallel or the second column is zero",
            rows=np.flatnonzero(nu[:, 0] <= DEGENERACY_TOLERANCE * scale[:, 0]).tolist(),
        )
    b2 = u / nu
    b3 = np.cross(b1, b2)
    rotations = np.stack([b1, b2, b3], axis=2)
    return rotations, DecodeCache(a1=a1, a2=a2, n1=n1, b1=b1, nu=nu, b2=b2, b3=b3)


def decode_backward(grad_rotations: np.ndarray, cache: DecodeCache) -> np.ndarray:
    """Gradient w.r.t. the raw (B, 6) input given dL/dR of shape (B, 3, 3)."""
    g1 = grad_rotations[:, :, 0].copy()
    g2 = grad_rotations[:, :, 1].copy()
    g3 = grad_rotations[:, :, 2]

    # b3 = b1 x b2
    g1 += np.cross(cache.b2, g3)
    g2 += np.cross(g3, cache.b1)

    # b2 = u / |u|
    gu = (g2 - np.sum(g2 * cache.b2, axis=1, keepdims=True) * cache.b2) / cache.nu

    # u = a2 - (b1 . a2) b1
    b1_dot_a2 = np.sum(cache.b1 * cache.a2, axis=1, keepdims=True)
    b1_dot_gu = np.sum(cache.b1 * gu, axis=1, keepdims=True)
    ga2 = gu - b1_dot_gu * cache.b1
    g1 = g1 - b1_dot_a2 * gu - b1_dot_gu * cache.a2

    # b1 = a1 / |a1|
    ga1 = (g1 - np.sum(g1 * cache.b1, axis=1, keepdims=True) * cache.b1) / cache.n1
    return np.concatenate([ga1, ga2], axis=1)


def rot6d_decode(r) -> np.ndarray:
    """Single 6-vector -> 3x3 rotation (orthonormal, det +1)."""
    raw = np.asarray(r, dtype=np.float64)
    if raw.shape != (6,):
        raise StabilizerError(
            Errors.SHAPE_MISMATCH, f"6D rotation must have 6 values, got {raw.shape}"
        )
    rotations, _ = decode_batch(raw[None, :])
    return rotations[0]
