# src/repositories/base.py
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Generic, TypeVar

from src.models.errors import Errors, StabilizerError
from src.repositories.container import file_digest

T = TypeVar("T")


class ArtifactRepository(ABC, Generic[T]):
    """One artifact file on disk"""

    def __init__(self, filepath: Path):
        self.filepath = Path(filepath)

    def _ensure_exists(self) -> None:
        """Verify file exists"""
        if not self.filepath.exists():
            raise StabilizerError(
                Errors.FILE_NOT_FOUND,
                f"File not found: {self.filepath}",
                filepath=str(self.filepath),
            )

    def digest(self) -> str:
        """SHA-256 of the stored file"""
        self._ensure_exists()
        return file_digest(self.filepath)

    @abstractmethod
    def load(self) -> T:
        """Read the artifact

        Returns:
            The decoded artifact
        """
        pass

    @abstractmethod
    def save(self, item: T) -> None:
        """Write the artifact atomically"""
        pass
