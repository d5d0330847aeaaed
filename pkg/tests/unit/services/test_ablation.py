# tests/unit/services/test_ablation.py
import pytest

from src.models.errors import Errors, StabilizerError
from src.services.ablation import AblationService, dataset_size_ablation, head_coverage_ablation
from src.synthesis.generator import generate_dataset


@pytest.fixture
def predictor(tiny_predictor):
    return tiny_predictor.model_copy(update={"iterations": 2})


@pytest.fixture(scope="module")
def dataset(psi, priors, synthesis_config):
    dist, library = priors
    return generate_dataset(synthesis_config.model_copy(update={"count": 6}), psi, dist, library)


def test_dataset_size_rows_are_sorted(psi, pairs, predictor, dataset):
    report = dataset_size_ablation(dataset, pairs[:3], psi, predictor, [6, 2])
    assert report.kind == "dataset_size"
    assert report.region == "face"
    assert [r.setting for r in report.rows] == ["2", "6"]
    assert [r.train_samples for r in report.rows] == [2, 6]
    assert all(r.md_mean > 0.0 for r in report.rows)
    assert report.config["sizes"] == [2, 6]


def test_dataset_size_rejects_sizes_beyond_the_dataset(psi, pairs, predictor, dataset):
    service = AblationService(psi, predictor, pairs[:3])
    with pytest.raises(StabilizerError) as exc:
        service.dataset_size(dataset, [2, 7])
    assert exc.value.code == Errors.INVALID_CONFIG
    with pytest.raises(StabilizerError) as exc:
        service.dataset_size(dataset, [])
    assert exc.value.code == Errors.EMPTY_INPUT


def test_head_coverage_trains_one_model_per_mask(psi, pairs, predictor, synthesis_config):
    synthesis = synthesis_config.model_copy(update={"count": 4})
    report = head_coverage_ablation(
        synthesis, pairs[:3], psi, predictor, ["frontal", "face"], region="upper"
    )
    assert report.region == "upper"
    assert report.kind == "head_coverage"
    assert [r.setting for r in report.rows] == ["frontal", "face"]
    assert all(r.train_samples == 4 for r in report.rows)
    assert report.config["masks"] == ["frontal", "face"]


def test_ablation_needs_validation_pairs(psi, predictor):
    with pytest.raises(StabilizerError) as exc:
        AblationService(psi, predictor, [])
    assert exc.value.code == Errors.EMPTY_INPUT
