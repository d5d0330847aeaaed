# tests/conftest.py
import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.config import PredictorConfig, SynthesisConfig  # noqa: E402
from src.morphable.builder import synth_model  # noqa: E402
from src.synthesis.generator import synthesize_indexed  # noqa: E402
from src.synthesis.priors import build_priors  # noqa: E402


@pytest.fixture(autouse=True)
def reset_global_settings():
    """Reset global settings singleton between tests to prevent state leakage."""
    from src.config import reset_settings

    yield
    reset_settings()


@pytest.fixture(scope="session")
def psi():
    """Small procedural model (642 vertices) shared by the whole session."""
    return synth_model(seed=0, n_vertices_target=642, n_identity=6, n_expression=12)


@pytest.fixture(scope="session")
def synthesis_config():
    return SynthesisConfig(count=24, seed=3, identity_set_size=100, library_size=40)


@pytest.fixture(scope="session")
def jaw_config(synthesis_config):
    return synthesis_config.model_copy(update={"jaw_rotation_std": 0.15, "seed": 4})


@pytest.fixture(scope="session")
def priors(synthesis_config, psi):
    return build_priors(synthesis_config, psi)


@pytest.fixture(scope="session")
def pairs(synthesis_config, psi, priors):
    dist, library = priors
    return [synthesize_indexed(synthesis_config, psi, dist, library, i) for i in range(8)]


@pytest.fixture(scope="session")
def jaw_pairs(jaw_config, psi, priors):
    dist, library = priors
    return [synthesize_indexed(jaw_config, psi, dist, library, i) for i in range(12)]


@pytest.fixture
def tiny_predictor():
    return PredictorConfig(
        extractor_sizes=[16, 12],
        latent_size=6,
        regressor_sizes=[10],
        iterations=5,
        batch_size=4,
        learning_rate=1e-4,
        seed=7,
        log_every=1,
        validate_every=5,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
