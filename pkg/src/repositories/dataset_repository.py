# src/repositories/dataset_repository.py
import numpy as np

from src.models.errors import Errors, StabilizerError
from src.models.synthesis import Dataset, DatasetHeader
from src.repositories.base import ArtifactRepository
from src.repositories.container import Container, read_container, write_container

DATASET_FORMAT_VERSION = 1


class DatasetRepository(ArtifactRepository[Dataset]):
    """Packed training pairs: float32 blocks, float64 transforms, uint64 seeds"""

    kind = "dataset"

    def save(self, item: Dataset) -> None:
        meta = {"dataset_version": DATASET_FORMAT_VERSION, **item.header.model_dump(mode="json")}
        tensors = {
            "sources": item.sources.astype(np.float32),
            "targets": item.targets.astype(np.float32),
            "gts": item.gts.astype(np.float64),
            "seeds": item.seeds.astype(np.uint64),
        }
        write_container(self.filepath, Container(kind=self.kind, meta=meta, tensors=tensors))

    def load(self) -> Dataset:
        self._ensure_exists()
        container = read_container(self.filepath, self.kind)
        meta = dict(container.meta)
        version = meta.pop("dataset_version", None)
        if version != DATASET_FORMAT_VERSION:
            raise StabilizerError(
                Errors.INCOMPATIBLE_VERSION,
                f"dataset version {version}, expected {DATASET_FORMAT_VERSION}",
                filepath=str(self.filepath),
            )
        t = container.tensors
        try:
            header = DatasetHeader.model_validate(meta)
            dataset = Dataset(
                header=header,
                sources=t["sources"],
                targets=t["targets"],
                gts=t["gts"],
                seeds=t["seeds"],
            )
        except (KeyError, ValueError) as e:
            raise StabilizerError(
                Errors.INVALID_DATA_FORMAT,
                f"malformed dataset file: {e}",
                filepath=str(self.filepath),
            ) from e
        expected = (header.count, 3, header.n_points)
        if dataset.sources.shape != expected or dataset.targets.shape != expected:
            raise StabilizerError(
                Errors.INVALID_DATA_FORMAT,
                f"dataset blocks have shape {dataset.sources.shape}, header says {expected}",
                filepath=str(self.filepath),
            )
        return dataset
