# src/repositories/model_repository.py
from src.models.errors import Errors, StabilizerError
from src.models.morphable import JOINT_NAMES, MODEL_FORMAT_VERSION, ModelData
from src.repositories.base import ArtifactRepository
from src.repositories.container import Container, read_container, write_container

_ARRAYS = (
    "template",
    "joints",
    "identity_basis",
    "expression_basis",
    "joint_identity_basis",
    "skinning_weights",
    "parents",
    "skull",
    "faces",
    "cranium",
)
_MASK_PREFIX = "mask."


class ModelRepository(ArtifactRepository[ModelData]):
    """Morphable model file (float64 tensors, int64 topology and masks)"""

    kind = "model"

    def save(self, item: ModelData) -> None:
        tensors = {name: getattr(item, name) for name in _ARRAYS}
        for name in sorted(item.masks):
            tensors[_MASK_PREFIX + name] = item.masks[name]
        meta = {
            "model_version": MODEL_FORMAT_VERSION,
            "seed": item.seed,
            "units": "mm",
            "joint_names": list(JOINT_NAMES),
            "n_vertices": item.n_vertices,
            "n_identity": item.n_identity,
            "n_expression": item.n_expression,
            "mask_sizes": {name: int(len(idx)) for name, idx in sorted(item.masks.items())},
        }
        write_container(self.filepath, Container(kind=self.kind, meta=meta, tensors=tensors))

    def load(self) -> ModelData:
        self._ensure_exists()
        container = read_container(self.filepath, self.kind)
        version = container.meta.get("model_version")
        if version != MODEL_FORMAT_VERSION:
            raise StabilizerError(
                Errors.INCOMPATIBLE_VERSION,
                f"model file version {version}, expected {MODEL_FORMAT_VERSION}",
                filepath=str(self.filepath),
            )
        tensors = container.tensors
        missing = [name for name in _ARRAYS if name not in tensors]
        if missing:
            raise StabilizerError(
                Errors.INVALID_DATA_FORMAT,
                f"model file lacks tensors: {', '.join(missing)}",
                filepath=str(self.filepath),
            )
        masks = {
            name[len(_MASK_PREFIX) :]: arr
            for name, arr in tensors.items()
            if name.startswith(_MASK_PREFIX)
        }
        try:
            return ModelData(
                **{name: tensors[name] for name in _ARRAYS},
                masks=masks,
                seed=int(container.meta.get("seed", 0)),
            )
        except ValueError as e:
            raise StabilizerError(
                Errors.INVALID_DATA_FORMAT,
                f"model file violates model invariants: {e}",
                filepath=str(self.filepath),
            ) from e
