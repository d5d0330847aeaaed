# src/repositories/cmap_repository.py
import numpy as np

from src.models.baselines import ConfidenceMap
from src.models.errors import Errors, StabilizerError
from src.repositories.base import ArtifactRepository
from src.repositories.container import Container, read_container, write_container


class ConfidenceMapRepository(ArtifactRepository[ConfidenceMap]):
    """Confidence map: float32 weights plus region, variant and provenance"""

    kind = "cmap"

    def __init__(self, filepath, provenance: dict | None = None):
        super().__init__(filepath)
        self.provenance = provenance or {}

    def save(self, item: ConfidenceMap) -> None:
        meta = {
            "region": item.region,
            "variant": item.variant,
            "count": len(item),
            "provenance": self.provenance,
        }
        tensors = {"weights": item.weights.astype(np.float32)}
        write_container(self.filepath, Container(kind=self.kind, meta=meta, tensors=tensors))

    def load(self) -> ConfidenceMap:
        self._ensure_exists()
        container = read_container(self.filepath, self.kind)
        try:
            self.provenance = dict(container.meta.get("provenance", {}))
            return ConfidenceMap(
                region=container.meta["region"],
                weights=container.tensors["weights"].astype(np.float64),
                variant=container.meta.get("variant", "uniform"),
            )
        except (KeyError, ValueError) as e:
            raise StabilizerError(
                Errors.INVALID_DATA_FORMAT,
                f"malformed confidence map: {e}",
                filepath=str(self.filepath),
            ) from e
