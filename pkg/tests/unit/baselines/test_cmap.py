# tests/unit/baselines/test_cmap.py
import numpy as np
import pytest

from src.baselines import cmap as cmap_module
from src.baselines.cmap import (
    cmap_losses,
    cmap_stabilize,
    cmap_train,
    map_error,
    neighbourhoods,
    select_step_size,
    term_weights,
    uniform_map,
)
from src.baselines.procrustes import proc_baseline
from src.config import CmapConfig, CmapVariant
from src.geometry.rigid import apply
from src.models.baselines import ConfidenceMap
from src.models.errors import Errors, StabilizerError
from src.morphable.model import masked, region_mask
from src.services.evaluation import mean_vertex_distance


def _blocks(psi, pair, region="face"):
    mask = region_mask(psi, region)
    return masked(pair.source_full, mask), masked(pair.target_full, mask)


def _losses(psi, w, us, ut, cfg: CmapConfig):
    return cmap_losses(w, us, ut, cfg, neighbourhoods(psi, "face", cfg.k))


def _config(variant: CmapVariant, **overrides) -> CmapConfig:
    values = {"variant": variant, "steps": 80, "step_size": 0.05, "batch_size": 4, "seed": 1}
    values.update(overrides)
    return CmapConfig(**values)


# ── energy terms ──────────────────────────────────────────────────────────────


def test_all_ones_has_no_regularizer_spread_or_roughness(psi, jaw_pairs):
    us, ut = _blocks(psi, jaw_pairs[0])
    losses = _losses(psi, np.ones(us.shape[1]), us, ut, CmapConfig())
    assert losses.reg == 0.0
    assert losses.sigma == 0.0
    assert losses.nbhd == 0.0
    assert losses.data > 0.0


def test_all_zeros_pays_the_full_regularizer(psi, jaw_pairs):
    us, ut = _blocks(psi, jaw_pairs[0])
    n = us.shape[1]
    losses = _losses(psi, np.zeros(n), us, ut, CmapConfig(rho=0.4))
    assert losses.data == 0.0
    assert losses.reg == pytest.approx(0.4 * n)


def test_constant_map_is_smooth(psi, jaw_pairs):
    us, ut = _blocks(psi, jaw_pairs[0])
    losses = _losses(psi, np.full(us.shape[1], 0.3), us, ut, CmapConfig())
    assert losses.nbhd == pytest.approx(0.0, abs=1e-12)
    assert losses.sigma == pytest.approx(0.0, abs=1e-12)


def test_spread_term_is_negative_std(psi, jaw_pairs, rng):
    us, ut = _blocks(psi, jaw_pairs[0])
    w = rng.uniform(0.0, 1.0, us.shape[1])
    assert _losses(psi, w, us, ut, CmapConfig()).sigma == pytest.approx(-w.std())


def test_smoothness_term_matches_the_training_objective(psi, jaw_pairs, rng):
    cfg = CmapConfig(alpha_data=0.0, alpha_reg=0.0, alpha_sigma=0.0, alpha_nbhd=1.0, k=6)
    problem = cmap_module._problem(jaw_pairs[:1], psi, cfg)
    w = rng.uniform(0.0, 1.0, problem.size)
    energy, _ = cmap_module._objective_gradient(w, problem.blocks, problem, cfg)
    us, ut = problem.blocks[0]
    assert _losses(psi, w, us, ut, cfg).nbhd == pytest.approx(energy, rel=1e-12)


def test_losses_reject_graph_of_other_size(psi, jaw_pairs):
    us, ut = _blocks(psi, jaw_pairs[0])
    with pytest.raises(StabilizerError) as exc:
        cmap_losses(np.ones(us.shape[1]), us, ut, CmapConfig(), neighbourhoods(psi, "upper", 10))
    assert exc.value.code == Errors.SHAPE_MISMATCH


def test_data_term_is_weighted_residual(psi, jaw_pairs):
    us, ut = _blocks(psi, jaw_pairs[1])
    n = us.shape[1]
    plain = _losses(psi, np.ones(n), us, ut, CmapConfig()).data
    s = proc_baseline(jaw_pairs[1].source_full, jaw_pairs[1].target_full, psi, "face")
    residual = float(np.sum((s.matrix @ us - ut)[:3] ** 2))
    assert plain == pytest.approx(residual)


def test_losses_reject_wrong_weight_count(psi, jaw_pairs):
    us, ut = _blocks(psi, jaw_pairs[0])
    with pytest.raises(StabilizerError) as exc:
        _losses(psi, np.ones(us.shape[1] - 1), us, ut, CmapConfig())
    assert exc.value.code == Errors.SHAPE_MISMATCH


def test_objective_gradient_matches_finite_differences(psi, jaw_pairs, rng):
    cfg = _config(CmapVariant.CONTRAST_CONSISTENT)
    problem = cmap_module._problem(jaw_pairs[:3], psi, cfg)
    w = rng.uniform(0.1, 0.9, problem.size)
    _, grad = cmap_module._objective_gradient(w, problem.blocks, problem, cfg)

    h = 1e-6
    for i in rng.choice(problem.size, size=6, replace=False):
        plus = w.copy()
        minus = w.copy()
        plus[i] += h
        minus[i] -= h
        numeric = (
            cmap_module._objective_gradient(plus, problem.blocks, problem, cfg)[0]
            - cmap_module._objective_gradient(minus, problem.blocks, problem, cfg)[0]
        ) / (2 * h)
        assert grad[i] == pytest.approx(numeric, rel=1e-4, abs=1e-8)


@pytest.mark.parametrize(
    ("variant", "expected"),
    [
        (CmapVariant.ORIGINAL, (100.0, 0.01, 0.0, 0.0)),
        (CmapVariant.CONTRAST, (100.0, 0.01, 100.0, 0.0)),
        (CmapVariant.CONTRAST_CONSISTENT, (100.0, 0.01, 100.0, 100.0)),
    ],
)
def test_variants_switch_terms_off(variant, expected):
    assert term_weights(CmapConfig(variant=variant)) == expected


# ── maps ──────────────────────────────────────────────────────────────────────


def test_neighbourhoods_include_self(psi):
    idx = neighbourhoods(psi, "face", 10)
    assert idx.shape == (len(psi.masks["face"]), 10)
    np.testing.assert_array_equal(idx[:, 0], np.arange(idx.shape[0]))


def test_uniform_map_is_plain_procrustes(psi, jaw_pairs):
    pair = jaw_pairs[2]
    weighted = cmap_stabilize(uniform_map(psi, "face"), pair.source_full, pair.target_full, psi)
    plain = proc_baseline(pair.source_full, pair.target_full, psi, "face")
    np.testing.assert_allclose(weighted.matrix, plain.matrix, atol=1e-9)


def test_map_weights_are_clamped():
    cmap = ConfidenceMap(region="face", weights=[-0.5, 0.25, 3.0])
    np.testing.assert_array_equal(cmap.weights, [0.0, 0.25, 1.0])


def test_stabilize_rejects_map_of_other_size(psi, jaw_pairs):
    cmap = ConfidenceMap(region="face", weights=np.ones(3))
    with pytest.raises(StabilizerError) as exc:
        cmap_stabilize(cmap, jaw_pairs[0].source_full, jaw_pairs[0].target_full, psi)
    assert exc.value.code == Errors.SHAPE_MISMATCH


def test_training_needs_pairs(psi):
    with pytest.raises(StabilizerError) as exc:
        cmap_train([], psi, CmapConfig())
    assert exc.value.code == Errors.EMPTY_INPUT


def test_training_is_deterministic_and_bounded(psi, jaw_pairs):
    cfg = _config(CmapVariant.CONTRAST_CONSISTENT)
    first = cmap_train(jaw_pairs, psi, cfg)
    second = cmap_train(jaw_pairs, psi, cfg)
    assert np.array_equal(first.weights, second.weights)
    assert first.variant == "contrast_consistent"
    assert len(first) == len(psi.masks["face"])
    assert first.weights.min() >= 0.0 and first.weights.max() <= 1.0


def test_contrast_spreads_the_weights(psi, jaw_pairs):
    original = cmap_train(jaw_pairs, psi, _config(CmapVariant.ORIGINAL))
    contrast = cmap_train(jaw_pairs, psi, _config(CmapVariant.CONTRAST))
    assert contrast.weights.std() > original.weights.std()


def test_consistency_smooths_the_weights(psi, jaw_pairs):
    neighbours = neighbourhoods(psi, "face", 10)
    us, ut = _blocks(psi, jaw_pairs[0])
    contrast = cmap_train(jaw_pairs, psi, _config(CmapVariant.CONTRAST))
    consistent = cmap_train(jaw_pairs, psi, _config(CmapVariant.CONTRAST_CONSISTENT))
    cfg = CmapConfig()
    rough = cmap_losses(contrast.weights, us, ut, cfg, neighbours).nbhd
    smooth = cmap_losses(consistent.weights, us, ut, cfg, neighbours).nbhd
    assert smooth < rough


def test_uniform_map_error_matches_face_procrustes(psi, jaw_pairs):
    mask = region_mask(psi, "face")
    pred, gt = [], []
    for pair in jaw_pairs[:4]:
        source = masked(pair.source_full, mask)
        pred.append(apply(proc_baseline(pair.source_full, pair.target_full, psi, "face"), source))
        gt.append(apply(pair.gt, source))
    expected = mean_vertex_distance(pred, gt)[0]
    assert map_error(uniform_map(psi, "face"), jaw_pairs[:4], psi) == pytest.approx(expected)


def test_select_step_size_skips_diverged_runs(psi, jaw_pairs, mocker):
    real = cmap_module._optimise

    def optimise(problem, cfg, step_size):
        if step_size == 1e-3:
            raise StabilizerError(Errors.TRAINING_DIVERGED, "boom")
        return real(problem, cfg, step_size)

    mocker.patch.object(cmap_module, "_optimise", side_effect=optimise)
    cfg = _config(CmapVariant.CONTRAST, steps=20, step_grid=[1e-3, 5e-2])
    step, cmap = select_step_size(jaw_pairs[:8], jaw_pairs[8:], psi, cfg)
    assert step == 5e-2
    assert len(cmap) == len(psi.masks["face"])


def test_select_step_size_fails_when_every_run_diverges(psi, jaw_pairs, mocker):
    mocker.patch.object(
        cmap_module,
        "_optimise",
        side_effect=StabilizerError(Errors.TRAINING_DIVERGED, "boom"),
    )
    with pytest.raises(StabilizerError) as exc:
        select_step_size(jaw_pairs[:8], jaw_pairs[8:], psi, _config(CmapVariant.ORIGINAL))
    assert exc.value.code == Errors.TRAINING_DIVERGED


def test_select_step_size_picks_the_lowest_validation_error(psi, jaw_pairs):
    cfg = _config(CmapVariant.CONTRAST, steps=20, step_grid=[1e-3, 5e-2])
    step, cmap = select_step_size(jaw_pairs[:8], jaw_pairs[8:], psi, cfg)
    errors = {
        s: map_error(cmap_train(jaw_pairs[:8], psi, cfg.model_copy(update={"step_size": s})), jaw_pairs[8:], psi)
        for s in cfg.step_grid
    }
    assert step == min(errors, key=errors.get)
    assert map_error(cmap, jaw_pairs[8:], psi) == pytest.approx(errors[step])
