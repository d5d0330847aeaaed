# src/morphable/builder.py
"""Procedural head model standing in for scanned/artist-made assets.

Every field is a function of unit-sphere directions u = (ux, uy, uz) of an
icosphere: +z faces forward, +y is up. Smooth band functions give skinning
weights, an expression "freedom" field and the region masks, so the
stable-skull region (freedom exactly 0, head weight exactly 1) is known by
construction.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import trimesh

from src.models.errors import Errors, StabilizerError
from src.models.morphable import HEAD, JAW, NECK, ROOT, ModelData

logger = logging.getLogger(__name__)

MIN_VERTICES = 500
MAX_SUBDIVISIONS = 7
SKULL_OFFSET_MM = 6.0
SMOOTHING_ROUNDS = 20

# Joint locations in the bind pose (mm)
_JOINTS = np.array(
    [
        [0.0, -165.0, -15.0],  # root, base of the neck
        [0.0, -105.0, -12.0],  # neck
        [0.0, -20.0, -5.0],  # head
        [0.0, -25.0, 25.0],  # jaw hinge
    ]
)
_PARENTS = np.array([-1, ROOT, NECK, HEAD])


@dataclass(frozen=True)
class _Landmark:
    center: tuple[float, float, float]
    direction: tuple[float, float, float]
    amplitude: float  # mm
    radius: float  # chord length on the unit sphere


_LANDMARKS: tuple[_Landmark, ...] = (
    _Landmark((0.0, -0.5, 0.85), (0.0, -1.0, -0.35), 10.0, 0.45),  # jaw drop
    _Landmark((0.0, -0.32, 0.95), (0.0, -0.6, 0.5), 5.0, 0.2),  # lower lip
    _Landmark((0.0, -0.2, 0.98), (0.0, 0.5, 0.5), 4.0, 0.18),  # upper lip
    _Landmark((0.3, -0.27, 0.91), (1.0, 0.4, -0.2), 5.0, 0.2),  # mouth corner
    _Landmark((-0.3, -0.27, 0.91), (-1.0, 0.4, -0.2), 5.0, 0.2),
    _Landmark((0.55, -0.08, 0.83), (0.2, 0.4, 1.0), 4.0, 0.28),  # cheek
    _Landmark((-0.55, -0.08, 0.83), (-0.2, 0.4, 1.0), 4.0, 0.28),
    _Landmark((0.3, 0.3, 0.9), (0.0, 1.0, 0.2), 4.0, 0.2),  # brow
    _Landmark((-0.3, 0.3, 0.9), (0.0, 1.0, 0.2), 4.0, 0.2),
    _Landmark((0.0, 0.0, 1.0), (0.0, 0.3, 0.5), 2.0, 0.15),  # nose
    _Landmark((0.5, -0.45, 0.74), (0.6, -0.3, 0.0), 5.0, 0.3),  # jaw side
    _Landmark((-0.5, -0.45, 0.74), (-0.6, -0.3, 0.0), 5.0, 0.3),
)


def smoothstep(edge0: float, edge1: float, x: np.ndarray) -> np.ndarray:
    """Cubic ramp from 0 at edge0 to 1 at edge1 (either order), exact outside."""
    t = np.clip((x - edge0) / (edge1 - edge0), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _unit(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    return a / np.linalg.norm(a)


def subdivisions_for(n_vertices_target: int) -> int:
    """Smallest icosphere level with at least the requested vertex count."""
    if n_vertices_target < MIN_VERTICES:
        raise StabilizerError(
            Errors.INVALID_CONFIG,
            f"model needs at least {MIN_VERTICES} vertices, got {n_vertices_target}",
            vertices=n_vertices_target,
        )
    for level in range(MAX_SUBDIVISIONS + 1):
        if 10 * 4**level + 2 >= n_vertices_target:
            return level
    raise StabilizerError(
        Errors.INVALID_CONFIG,
        f"{n_vertices_target} vertices exceeds the largest supported icosphere",
        vertices=n_vertices_target,
    )


def _head_shape(u: np.ndarray) -> np.ndarray:
    ux, uy, uz = u.T
    neck = smoothstep(-0.6, -0.95, uy)
    radial = 1.0 - 0.5 * neck
    x = 72.0 * ux * radial
    y = 100.0 * uy - 70.0 * neck
    z = 85.0 * uz * radial - 10.0 * neck

    def bump(center, sigma):
        d2 = np.sum((u - _unit(center)) ** 2, axis=1)
        return np.exp(-d2 / (2.0 * sigma**2))

    z = z + 22.0 * bump((0.0, 0.05, 1.0), 0.1)  # nose
    z = z + 8.0 * bump((0.0, -0.55, 0.83), 0.15)  # chin
    brow = np.exp(-((uy - 0.32) ** 2) / (2 * 0.05**2)) * np.exp(-(ux**2) / (2 * 0.3**2))
    z = z + 6.0 * brow * smoothstep(0.3, 0.7, uz)
    return np.stack([x, y, z])


def _skinning_weights(u: np.ndarray) -> np.ndarray:
    _, uy, uz = u.T
    t_neck = smoothstep(-0.55, -0.75, uy)
    t_root = smoothstep(-0.8, -0.95, uy)
    g_jaw = smoothstep(-0.22, -0.42, uy) * smoothstep(0.05, 0.35, uz)
    upper = 1.0 - t_neck
    w = np.zeros((4, u.shape[0]))
    w[ROOT] = t_neck * t_root
    w[NECK] = t_neck * (1.0 - t_root)
    w[HEAD] = upper * (1.0 - g_jaw)
    w[JAW] = upper * g_jaw
    return w


def _expression_freedom(u: np.ndarray) -> np.ndarray:
    """1 on the mobile face, exactly 0 on the top and back of the head."""
    _, uy, uz = u.T
    return smoothstep(0.55, 0.38, uy) * smoothstep(-0.05, 0.2, uz)


def _region_masks(u: np.ndarray) -> dict[str, np.ndarray]:
    ux, uy, uz = u.T
    head = uy > -0.8
    face = head & (uz > 0.0)
    frontal = face & (uz > 0.18) & (uy > -0.75)
    masks = {
        "full": np.ones(len(u), dtype=bool),
        "head": head,
        "face": face,
        "frontal": frontal,
        "upper": face & (uy > -0.1) & (np.abs(ux) < 0.55),
        "face_and_neck": uz > 0.0,
        "superhero": frontal & (uy > -0.22) & (np.abs(ux) < 0.6),
    }
    return {name: np.flatnonzero(m) for name, m in masks.items()}


def _smoothing_operator(n: int, edges: np.ndarray) -> sp.csr_matrix:
    """Row-stochastic neighbour averaging (vertex plus its one-ring)."""
    rows = np.concatenate([edges[:, 0], edges[:, 1], np.arange(n)])
    cols = np.concatenate([edges[:, 1], edges[:, 0], np.arange(n)])
    adjacency = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    degree = np.asarray(adjacency.sum(axis=1)).ravel()
    return sp.diags(1.0 / degree) @ adjacency


def _identity_basis(
    rng: np.random.Generator, n_identity: int, smoother: sp.csr_matrix, n: int
) -> np.ndarray:
    basis = np.zeros((n_identity, 4, n))
    for i in range(n_identity):
        field = rng.normal(size=(n, 3))
        for _ in range(SMOOTHING_ROUNDS):
            field = smoother @ field
        rms = np.sqrt(np.mean(np.sum(field**2, axis=1)))
        amplitude = 4.0 / np.sqrt(1.0 + i)
        basis[i, :3] = (field * (amplitude / rms)).T
    return basis


def _expression_basis(
    rng: np.random.Generator, n_expression: int, u: np.ndarray, freedom: np.ndarray
) -> np.ndarray:
    n = u.shape[0]
    basis = np.zeros((n_expression, 4, n))
    for b in range(n_expression):
        landmark = _LANDMARKS[b % len(_LANDMARKS)]
        center = _unit(landmark.center)
        if b >= len(_LANDMARKS):
            center = _unit(center + rng.normal(0.0, 0.05, size=3))
        direction = _unit(np.asarray(landmark.direction) + rng.normal(0.0, 0.25, size=3))
        amplitude = landmark.amplitude * rng.uniform(0.7, 1.3)
        d = np.linalg.norm(u - center, axis=1)
        window = np.where(d < landmark.radius, 0.5 * (1.0 + np.cos(np.pi * d / landmark.radius)), 0.0)
        magnitude = amplitude * window * freedom
        basis[b, :3] = direction[:, None] * magnitude[None, :]
    return basis


def _joint_identity_basis(identity_basis: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Q_i: skinning-weighted mean of identity row i per joint."""
    totals = np.maximum(weights.sum(axis=1), np.finfo(np.float64).tiny)
    return np.einsum("bcn,kn->bck", identity_basis, weights) / totals


def synth_model(
    seed: int = 0, n_vertices_target: int = 2562, n_identity: int = 16, n_expression: int = 24
) -> ModelData:
    """Build a deterministic head model (see module docstring)."""
    level = subdivisions_for(n_vertices_target)
    sphere = trimesh.creation.icosphere(subdivisions=level, radius=1.0)
    u = np.asarray(sphere.vertices, dtype=np.float64)
    u = u / np.linalg.norm(u, axis=1, keepdims=True)
    faces = np.asarray(sphere.faces, dtype=np.int64)
    n = u.shape[0]
    rng = np.random.default_rng(seed)

    xyz = _head_shape(u)
    template = np.vstack([xyz, np.ones((1, n))])
    weights = _skinning_weights(u)
    freedom = _expression_freedom(u)

    cranium = np.flatnonzero((freedom == 0.0) & (weights[HEAD] == 1.0) & (u[:, 1] > -0.5))
    mesh = trimesh.Trimesh(vertices=xyz.T, faces=faces, process=False)
    normals = np.asarray(mesh.vertex_normals, dtype=np.float64)
    skull_xyz = xyz[:, cranium] - SKULL_OFFSET_MM * normals[cranium].T
    skull = np.vstack([skull_xyz, np.ones((1, len(cranium)))])

    smoother = _smoothing_operator(n, np.asarray(mesh.edges_unique, dtype=np.int64))
    identity_basis = _identity_basis(rng, n_identity, smoother, n)
    expression_basis = _expression_basis(rng, n_expression, u, freedom)
    if np.any(expression_basis[:, :, cranium] != 0.0):
        raise StabilizerError(
            Errors.DEGENERATE_GEOMETRY, "expression basis displaces cranium vertices"
        )

    joints = np.vstack([_JOINTS.T, np.ones((1, 4))])
    psi = ModelData(
        template=template,
        joints=joints,
        identity_basis=identity_basis,
        expression_basis=expression_basis,
        joint_identity_basis=_joint_identity_basis(identity_basis, weights),
        skinning_weights=weights,
        parents=_PARENTS,
        skull=skull,
        faces=faces,
        masks=_region_masks(u),
        cranium=cranium,
        seed=seed,
    )
    logger.info(
        "Synthesized model: %d vertices, %d skull points, frontal %d",
        n,
        len(cranium),
        len(psi.masks["frontal"]),
    )
    return psi
