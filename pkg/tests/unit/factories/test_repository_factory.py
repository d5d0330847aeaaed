# tests/unit/factories/test_repository_factory.py
import pytest

from src.factories.repository_factory import RepositoryFactory
from src.models.errors import Errors, StabilizerError
from src.repositories.checkpoint_repository import CheckpointRepository
from src.repositories.cmap_repository import ConfidenceMapRepository
from src.repositories.dataset_repository import DatasetRepository
from src.repositories.model_repository import ModelRepository
from src.repositories.report_repository import AblationReportRepository, ReportRepository


def test_factory_creates_typed_repositories(tmp_path):
    factory = RepositoryFactory()
    assert isinstance(factory.create_model_repository(tmp_path / "m.bin"), ModelRepository)
    assert isinstance(factory.create_dataset_repository(tmp_path / "d.bin"), DatasetRepository)
    assert isinstance(factory.create_checkpoint_repository(tmp_path / "c.bin"), CheckpointRepository)
    assert isinstance(factory.create_report_repository(tmp_path / "r.json"), ReportRepository)
    assert isinstance(factory.create_ablation_repository(tmp_path / "a.json"), AblationReportRepository)


def test_factory_passes_cmap_provenance(tmp_path):
    repo = RepositoryFactory().create_cmap_repository(tmp_path / "cmap.bin", {"seed": 3})
    assert isinstance(repo, ConfidenceMapRepository)
    assert repo.provenance == {"seed": 3}


@pytest.mark.parametrize(
    ("kind", "expected"),
    [
        ("model", ModelRepository),
        ("dataset", DatasetRepository),
        ("checkpoint", CheckpointRepository),
        ("cmap", ConfidenceMapRepository),
        ("report", ReportRepository),
        ("ablation", AblationReportRepository),
    ],
)
def test_factory_creates_by_kind(tmp_path, kind, expected):
    repo = RepositoryFactory().create_repository(kind, str(tmp_path / "artifact"))
    assert isinstance(repo, expected)
    assert repo.filepath == tmp_path / "artifact"


def test_factory_rejects_unknown_kind(tmp_path):
    with pytest.raises(StabilizerError) as exc:
        RepositoryFactory().create_repository("mesh", tmp_path / "x")
    assert exc.value.code == Errors.INVALID_CONFIG
