# src/synthesis/priors.py
"""Identity and expression priors that stand in for registered-scan parameter sets."""

import logging

import numpy as np

from src.config import SynthesisConfig
from src.models.errors import Errors, StabilizerError
from src.models.morphable import ModelData
from src.models.synthesis import ExpressionLibrary, IdentityDistribution

logger = logging.getLogger(__name__)


def fit_identity_distribution(identity_set) -> IdentityDistribution:
    """Per-coordinate mean and population std (ddof=0) of an identity set."""
    betas = np.asarray(identity_set, dtype=np.float64)
    if betas.ndim != 2 or betas.shape[0] < 2:
        raise StabilizerError(
            Errors.EMPTY_INPUT,
            "identity distribution needs at least 2 identity vectors",
            count=int(betas.shape[0]) if betas.ndim else 0,
        )
    return IdentityDistribution(mean=betas.mean(axis=0), std=betas.std(axis=0))


def synth_identity_set(seed: int, count: int, n_identity: int) -> np.ndarray:
    """Identity vectors drawn from N(0, 1); basis amplitudes already decay with index."""
    rng = np.random.default_rng([seed, 0x1D])
    return rng.normal(size=(count, n_identity))


def synth_expression_library(
    seed: int,
    count: int,
    sparsity: int,
    n_expression: int,
    magnitude_min: float = 0.2,
    magnitude_max: float = 1.0,
) -> ExpressionLibrary:
    """Sparse expression vectors: each entry activates ``sparsity`` distinct bases."""
    if count < 1:
        raise StabilizerError(Errors.EMPTY_INPUT, "expression library needs count >= 1")
    rng = np.random.default_rng([seed, 0xE7])
    active = min(sparsity, n_expression)
    entries = np.zeros((count, n_expression))
    for row in entries:
        if active == 0:
            continue
        chosen = rng.choice(n_expression, size=active, replace=False)
        row[chosen] = rng.uniform(magnitude_min, magnitude_max, size=active)
    return ExpressionLibrary(entries=entries)


def build_priors(
    cfg: SynthesisConfig, psi: ModelData
) -> tuple[IdentityDistribution, ExpressionLibrary]:
    """Identity distribution and expression library for a model.

    Seeded by the model seed so training, validation and test sets share the
    same priors and differ only in their sample seeds.
    """
    identities = synth_identity_set(psi.seed, cfg.identity_set_size, psi.n_identity)
    dist = fit_identity_distribution(identities)
    library = synth_expression_library(
        psi.seed,
        cfg.library_size,
        cfg.library_sparsity,
        psi.n_expression,
        cfg.expression_min,
        cfg.expression_max,
    )
    logger.debug(
        "Priors: %d identities, %d library entries (sparsity %d)",
        len(identities),
        len(library),
        cfg.library_sparsity,
    )
    return dist, library
