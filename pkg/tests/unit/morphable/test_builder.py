# tests/unit/morphable/test_builder.py
import numpy as np
import pytest

from src.models.errors import Errors, StabilizerError
from src.models.morphable import HEAD, JAW, JOINT_NAMES, REGION_NAMES
from src.morphable.builder import smoothstep, subdivisions_for, synth_model

# share of the head a full-resolution capture keeps as its frontal area
FRONTAL_SHARE = 6663 / 17821


def test_vertex_count_follows_icosphere_levels(psi):
    assert psi.n_vertices == 642
    assert psi.faces.shape[1] == 3
    assert psi.faces.max() == psi.n_vertices - 1


@pytest.mark.parametrize(
    ("target", "level"),
    [(500, 3), (642, 3), (643, 4), (2562, 4)],
)
def test_subdivisions_for(target, level):
    assert subdivisions_for(target) == level


def test_too_few_vertices_is_invalid():
    with pytest.raises(StabilizerError) as exc:
        synth_model(n_vertices_target=499)
    assert exc.value.code == Errors.INVALID_CONFIG


def test_four_joint_chain(psi):
    assert psi.n_joints == len(JOINT_NAMES) == 4
    assert psi.parents.tolist() == [-1, 0, 1, 2]


def test_every_region_mask_is_nonempty_and_in_range(psi):
    for name in REGION_NAMES:
        idx = psi.masks[name]
        assert idx.size > 0, name
        assert idx.min() >= 0 and idx.max() < psi.n_vertices


def test_region_nesting(psi):
    full = set(psi.masks["full"].tolist())
    head = set(psi.masks["head"].tolist())
    face = set(psi.masks["face"].tolist())
    upper = set(psi.masks["upper"].tolist())
    assert len(full) == psi.n_vertices
    assert upper < face < head < full


def test_frontal_mask_share(psi):
    share = psi.masks["frontal"].size / psi.n_vertices
    assert share == pytest.approx(FRONTAL_SHARE, rel=0.1)


def test_frontal_mask_share_at_default_resolution():
    model = synth_model(seed=0, n_vertices_target=2562)
    share = model.masks["frontal"].size / model.n_vertices
    assert share == pytest.approx(FRONTAL_SHARE, rel=0.1)


def test_upper_face_avoids_the_jaw(psi):
    assert np.all(psi.skinning_weights[JAW, psi.masks["upper"]] <= 0.5)


def test_cranium_is_rigid_head_skin(psi):
    cranium = psi.cranium
    assert cranium.size > 0
    np.testing.assert_array_equal(psi.skinning_weights[HEAD, cranium], 1.0)
    assert np.all(psi.expression_basis[:, :, cranium] == 0.0)


def test_skull_sits_inside_the_skin(psi):
    assert psi.skull.shape == (4, psi.cranium.size)
    skin = psi.template[:3, psi.cranium]
    depth = np.linalg.norm(skin - psi.skull[:3], axis=0)
    np.testing.assert_allclose(depth, 6.0, atol=1e-9)


def test_skinning_weights_are_a_partition_of_unity(psi):
    np.testing.assert_allclose(psi.skinning_weights.sum(axis=0), 1.0)
    assert np.all(psi.skinning_weights >= 0.0)


def test_same_seed_same_model(psi):
    again = synth_model(seed=0, n_vertices_target=642, n_identity=6, n_expression=12)
    assert np.array_equal(again.identity_basis, psi.identity_basis)
    assert np.array_equal(again.expression_basis, psi.expression_basis)
    assert np.array_equal(again.skull, psi.skull)


def test_different_seed_changes_bases(psi):
    other = synth_model(seed=1, n_vertices_target=642, n_identity=6, n_expression=12)
    assert np.array_equal(other.template, psi.template)
    assert not np.array_equal(other.identity_basis, psi.identity_basis)


def test_model_arrays_are_read_only(psi):
    with pytest.raises(ValueError):
        psi.template[0, 0] = 1.0


def test_smoothstep_is_clamped_and_reversible():
    x = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    np.testing.assert_allclose(smoothstep(0.0, 1.0, x), [0.0, 0.0, 0.5, 1.0, 1.0])
    np.testing.assert_allclose(smoothstep(1.0, 0.0, x), [1.0, 1.0, 0.5, 0.0, 0.0])
