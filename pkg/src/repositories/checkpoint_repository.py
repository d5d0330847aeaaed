# src/repositories/checkpoint_repository.py
import logging

from src.config import PredictorConfig
from src.models.errors import Errors, StabilizerError
from src.models.predictor import CHECKPOINT_FORMAT_VERSION, PredictorWeights
from src.repositories.base import ArtifactRepository
from src.repositories.container import Container, read_container, write_container

logger = logging.getLogger(__name__)


class CheckpointRepository(ArtifactRepository[PredictorWeights]):
    """Predictor weights plus Adam state, lossless (float64)"""

    kind = "checkpoint"

    def save(self, item: PredictorWeights) -> None:
        tensors = {}
        for i, (w, b) in enumerate(zip(item.weights, item.biases)):
            tensors[f"layer.{i}.weight"] = w
            tensors[f"layer.{i}.bias"] = b
        for i, (m, v) in enumerate(zip(item.adam_m, item.adam_v)):
            tensors[f"adam.{i}.m"] = m
            tensors[f"adam.{i}.v"] = v
        meta = {
            "checkpoint_version": CHECKPOINT_FORMAT_VERSION,
            "config": item.config.model_dump(mode="json"),
            "input_dim": item.input_dim,
            "mask": item.mask,
            "iteration": item.iteration,
            "seed": item.config.seed,
            "model_digest": item.model_digest,
            "dataset_digest": item.dataset_digest,
            "n_layers": len(item.weights),
        }
        write_container(self.filepath, Container(kind=self.kind, meta=meta, tensors=tensors))

    def load(self, expected_points: int | None = None) -> PredictorWeights:
        """Load weights; ``expected_points`` rejects checkpoints built for another N_C."""
        self._ensure_exists()
        container = read_container(self.filepath, self.kind)
        meta = container.meta
        version = meta.get("checkpoint_version")
        if version != CHECKPOINT_FORMAT_VERSION:
            raise StabilizerError(
                Errors.INCOMPATIBLE_VERSION,
                f"checkpoint version {version}, expected {CHECKPOINT_FORMAT_VERSION}",
                filepath=str(self.filepath),
            )
        t = container.tensors
        try:
            n_layers = int(meta["n_layers"])
            weights = PredictorWeights(
                config=PredictorConfig.model_validate(meta["config"]),
                input_dim=int(meta["input_dim"]),
                mask=meta["mask"],
                weights=[t[f"layer.{i}.weight"] for i in range(n_layers)],
                biases=[t[f"layer.{i}.bias"] for i in range(n_layers)],
                adam_m=[t[f"adam.{i}.m"] for i in range(2 * n_layers)],
                adam_v=[t[f"adam.{i}.v"] for i in range(2 * n_layers)],
                iteration=int(meta["iteration"]),
                model_digest=meta.get("model_digest", ""),
                dataset_digest=meta.get("dataset_digest", ""),
            )
        except (KeyError, ValueError) as e:
            raise StabilizerError(
                Errors.INVALID_DATA_FORMAT,
                f"malformed checkpoint: {e}",
                filepath=str(self.filepath),
            ) from e
        if expected_points is not None and weights.n_points != expected_points:
            raise StabilizerError(
                Errors.SHAPE_MISMATCH,
                f"checkpoint was trained on {weights.n_points} points, input has {expected_points}",
                checkpoint=weights.n_points,
                expected=expected_points,
            )
        return weights

    def check_model(self, weights: PredictorWeights, model_digest: str) -> None:
        """Warn when a checkpoint was trained against a different model file."""
        if weights.model_digest and model_digest and weights.model_digest != model_digest:
            logger.warning(
                "Checkpoint %s was trained on model %s..., current model is %s...",
                self.filepath,
                weights.model_digest[:12],
                model_digest[:12],
            )
