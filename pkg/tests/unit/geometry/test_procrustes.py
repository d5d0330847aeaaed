# tests/unit/geometry/test_procrustes.py
import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from src.geometry.procrustes import (
    procrustes_align,
    procrustes_transform,
    weighted_procrustes,
    weighted_residuals,
)
from src.geometry.rigid import apply
from src.models.errors import Errors, StabilizerError
from src.models.geometry import RigidTransform


def _block(points: np.ndarray) -> np.ndarray:
    return np.vstack([points, np.ones((1, points.shape[1]))])


def _known_transform() -> RigidTransform:
    return RigidTransform.from_parts(
        Rotation.from_euler("zyx", [0.4, -0.2, 0.1]).as_matrix(), [5.0, -3.0, 12.0]
    )


def test_self_alignment_is_identity(rng):
    x = _block(rng.normal(size=(3, 30)))
    np.testing.assert_allclose(procrustes_transform(x, x).matrix, np.eye(4), atol=1e-10)


def test_recovers_known_transform(rng):
    x = _block(rng.normal(0.0, 50.0, size=(3, 40)))
    s = _known_transform()
    np.testing.assert_allclose(procrustes_transform(x, apply(s, x)).matrix, s.matrix, atol=1e-9)


def test_align_moves_source_onto_target(rng):
    x = _block(rng.normal(0.0, 50.0, size=(3, 40)))
    y = apply(_known_transform(), x)
    np.testing.assert_allclose(procrustes_align(x, y), y, atol=1e-8)


def test_moving_the_target_moves_the_transform(rng):
    x = _block(rng.normal(0.0, 30.0, size=(3, 40)))
    y = _block(rng.normal(0.0, 30.0, size=(3, 40)))
    z = _known_transform()
    np.testing.assert_allclose(
        procrustes_transform(x, apply(z, y)).matrix,
        z.matrix @ procrustes_transform(x, y).matrix,
        atol=1e-6,
    )


def test_never_returns_a_reflection(rng):
    x = _block(rng.normal(size=(3, 25)))
    mirrored = x.copy()
    mirrored[0] *= -1.0
    s = procrustes_transform(x, mirrored)
    assert np.linalg.det(s.rotation) == pytest.approx(1.0)


def test_collinear_points_are_degenerate():
    t = np.linspace(0.0, 1.0, 10)
    x = _block(np.vstack([t, 2 * t, 3 * t]))
    with pytest.raises(StabilizerError) as exc:
        procrustes_transform(x, x)
    assert exc.value.code == Errors.DEGENERATE_GEOMETRY


def test_too_few_points_are_degenerate():
    x = _block(np.eye(3)[:, :2])
    with pytest.raises(StabilizerError) as exc:
        procrustes_transform(x, x)
    assert exc.value.code == Errors.DEGENERATE_GEOMETRY


def test_point_count_mismatch(rng):
    with pytest.raises(StabilizerError) as exc:
        procrustes_transform(_block(rng.normal(size=(3, 5))), _block(rng.normal(size=(3, 6))))
    assert exc.value.code == Errors.SHAPE_MISMATCH


def test_unit_weights_match_plain_procrustes(rng):
    x = _block(rng.normal(size=(3, 30)))
    y = _block(rng.normal(size=(3, 30)))
    np.testing.assert_allclose(
        weighted_procrustes(x, y, np.ones(30)).matrix, procrustes_transform(x, y).matrix, atol=1e-10
    )


def test_weight_scale_does_not_change_the_fit(rng):
    us = _block(rng.normal(0.0, 20.0, size=(3, 30)))
    ut = apply(_known_transform(), us)
    ut[:3] += rng.normal(0.0, 1.0, size=(3, 30))
    w = rng.uniform(0.1, 1.0, 30)
    np.testing.assert_allclose(
        weighted_procrustes(us, ut, np.full(30, 0.5)).matrix,
        weighted_procrustes(us, ut, np.ones(30)).matrix,
        atol=1e-9,
    )
    np.testing.assert_allclose(
        weighted_procrustes(us, ut, 0.5 * w).matrix,
        weighted_procrustes(us, ut, w).matrix,
        atol=1e-9,
    )


def test_weights_enter_squared(rng):
    x = _block(rng.normal(size=(3, 30)))
    y = _block(rng.normal(size=(3, 30)))
    w = rng.uniform(0.1, 1.0, 30)
    s = weighted_procrustes(x, y, w)

    # the optimum of sum w^2 |S x - y|^2 beats nearby perturbations
    best = float(np.sum(w**2 * weighted_residuals(s, x, y)))
    for angle in (1e-3, -1e-3):
        nudged = RigidTransform.from_parts(
            Rotation.from_rotvec([0.0, 0.0, angle]).as_matrix() @ s.rotation, s.translation
        )
        assert best <= float(np.sum(w**2 * weighted_residuals(nudged, x, y)))
    # and it differs from the fit weighted by w alone
    linear = weighted_procrustes(x, y, np.sqrt(w))
    assert not np.allclose(linear.matrix, s.matrix)


def test_zero_weight_vertices_drop_out(rng):
    x = _block(rng.normal(0.0, 10.0, size=(3, 20)))
    s = _known_transform()
    y = apply(s, x)
    y[:3, :5] += rng.normal(0.0, 100.0, size=(3, 5))
    w = np.ones(20)
    w[:5] = 0.0
    np.testing.assert_allclose(weighted_procrustes(x, y, w).matrix, s.matrix, atol=1e-9)


def test_all_zero_weights_are_degenerate(rng):
    x = _block(rng.normal(size=(3, 10)))
    with pytest.raises(StabilizerError) as exc:
        weighted_procrustes(x, x, np.zeros(10))
    assert exc.value.code == Errors.DEGENERATE_GEOMETRY


def test_negative_weights_are_rejected(rng):
    x = _block(rng.normal(size=(3, 10)))
    w = np.ones(10)
    w[3] = -0.5
    with pytest.raises(StabilizerError) as exc:
        weighted_procrustes(x, x, w)
    assert exc.value.code == Errors.INVALID_DATA_FORMAT


def test_weight_length_mismatch(rng):
    x = _block(rng.normal(size=(3, 10)))
    with pytest.raises(StabilizerError) as exc:
        weighted_procrustes(x, x, np.ones(9))
    assert exc.value.code == Errors.SHAPE_MISMATCH


def test_weighted_residuals_are_squared_distances():
    x = _block(np.zeros((3, 2)))
    y = _block(np.array([[3.0, 0.0], [4.0, 0.0], [0.0, 2.0]]))
    np.testing.assert_allclose(
        weighted_residuals(RigidTransform.identity(), x, y), [25.0, 4.0]
    )
