# tests/unit/synthesis/test_priors.py
import numpy as np
import pytest

from src.models.errors import Errors, StabilizerError
from src.synthesis.priors import (
    build_priors,
    fit_identity_distribution,
    synth_expression_library,
    synth_identity_set,
)


def test_fit_identity_distribution_uses_population_std():
    dist = fit_identity_distribution([[0.0, 1.0], [2.0, 1.0]])
    np.testing.assert_allclose(dist.mean, [1.0, 1.0])
    np.testing.assert_allclose(dist.std, [1.0, 0.0])


def test_fit_identity_distribution_needs_two_vectors():
    with pytest.raises(StabilizerError) as exc:
        fit_identity_distribution([[0.0, 1.0]])
    assert exc.value.code == Errors.EMPTY_INPUT


def test_identity_set_is_seeded():
    a = synth_identity_set(5, 10, 4)
    assert a.shape == (10, 4)
    assert np.array_equal(a, synth_identity_set(5, 10, 4))
    assert not np.array_equal(a, synth_identity_set(6, 10, 4))


def test_expression_library_sparsity_and_range():
    library = synth_expression_library(0, 50, 3, 12, 0.2, 1.0)
    assert len(library) == 50
    active = library.entries != 0.0
    assert np.all(active.sum(axis=1) == 3)
    values = library.entries[active]
    assert values.min() >= 0.2 and values.max() <= 1.0


def test_expression_library_zero_sparsity_is_neutral():
    library = synth_expression_library(0, 5, 0, 12)
    assert np.all(library.entries == 0.0)


def test_expression_library_needs_entries():
    with pytest.raises(StabilizerError) as exc:
        synth_expression_library(0, 0, 3, 12)
    assert exc.value.code == Errors.EMPTY_INPUT


def test_build_priors_depend_on_the_model_seed_only(psi, synthesis_config):
    dist, library = build_priors(synthesis_config, psi)
    other_dist, other_library = build_priors(synthesis_config.model_copy(update={"seed": 99}), psi)
    assert np.array_equal(dist.mean, other_dist.mean)
    assert np.array_equal(library.entries, other_library.entries)
    assert dist.mean.shape == (psi.n_identity,)
    assert library.entries.shape == (synthesis_config.library_size, psi.n_expression)
