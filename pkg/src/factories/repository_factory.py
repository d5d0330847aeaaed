# src/factories/repository_factory.py
from pathlib import Path

from src.models.errors import Errors, StabilizerError
from src.repositories.base import ArtifactRepository
from src.repositories.checkpoint_repository import CheckpointRepository
from src.repositories.cmap_repository import ConfidenceMapRepository
from src.repositories.dataset_repository import DatasetRepository
from src.repositories.model_repository import ModelRepository
from src.repositories.report_repository import AblationReportRepository, ReportRepository

_REPOSITORIES: dict[str, type[ArtifactRepository]] = {
    "model": ModelRepository,
    "dataset": DatasetRepository,
    "checkpoint": CheckpointRepository,
    "cmap": ConfidenceMapRepository,
    "report": ReportRepository,
    "ablation": AblationReportRepository,
}


class RepositoryFactory:
    """Factory for creating repository instances"""

    def create_model_repository(self, filepath: Path) -> ModelRepository:
        return ModelRepository(filepath)

    def create_dataset_repository(self, filepath: Path) -> DatasetRepository:
        return DatasetRepository(filepath)

    def create_checkpoint_repository(self, filepath: Path) -> CheckpointRepository:
        return CheckpointRepository(filepath)

    def create_cmap_repository(
        self, filepath: Path, provenance: dict | None = None
    ) -> ConfidenceMapRepository:
        return ConfidenceMapRepository(filepath, provenance)

    def create_report_repository(self, filepath: Path) -> ReportRepository:
        return ReportRepository(filepath)

    def create_ablation_repository(self, filepath: Path) -> AblationReportRepository:
        return AblationReportRepository(filepath)

    def create_repository(self, kind: str, source: Path | str) -> ArtifactRepository:
        """Create repository based on artifact kind

        Args:
            kind: One of model, dataset, checkpoint, cmap, report, ablation
            source: File path of the artifact

        Returns:
            Appropriate repository instance
        """
        if kind not in _REPOSITORIES:
            raise StabilizerError(
                Errors.INVALID_CONFIG,
                f"Unknown artifact kind '{kind}', expected one of {', '.join(_REPOSITORIES)}",
                kind=kind,
            )
        source_path = Path(source) if isinstance(source, str) else source
        return _REPOSITORIES[kind](source_path)
