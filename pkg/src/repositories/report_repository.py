# src/repositories/report_repository.py
import csv
import io
import json
from pathlib import Path

from pydantic import BaseModel, ValidationError

from src.models.errors import Errors, StabilizerError
from src.models.evaluation import AblationReport, EvalReport
from src.repositories.base import ArtifactRepository
from src.repositories.container import atomic_write_text

_CSV_COLUMNS = ["method", "region", "md_mean", "md_std", "mx", "auc"]


class _JSONRepository(ArtifactRepository):
    model: type[BaseModel]

    def save(self, item) -> None:
        atomic_write_text(self.filepath, item.model_dump_json(indent=2) + "\n")

    def load(self):
        self._ensure_exists()
        try:
            with open(self.filepath, encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise StabilizerError(
                Errors.INVALID_DATA_FORMAT,
                f"Invalid JSON in {self.filepath}: {e.msg} at line {e.lineno}:{e.colno}",
            ) from e
        try:
            return self.model.model_validate(data)
        except ValidationError as e:
            raise StabilizerError(
                Errors.INVALID_DATA_FORMAT,
                f"{self.filepath} is not a valid {self.model.__name__}: {e.error_count()} errors",
                filepath=str(self.filepath),
            ) from e


class ReportRepository(_JSONRepository):
    """Evaluation report (JSON) with optional CSV export"""

    model = EvalReport

    def save_csv(self, report: EvalReport, path: Path) -> None:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        for row in report.rows:
            writer.writerow([getattr(row, c) for c in _CSV_COLUMNS])
        atomic_write_text(path, buffer.getvalue())


class AblationReportRepository(_JSONRepository):
    """Ablation report (JSON)"""

    model = AblationReport
