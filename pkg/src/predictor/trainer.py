# src/predictor/trainer.py
import copy
import logging
from collections.abc import Callable
from pathlib import Path
from typing import NoReturn, Protocol

import numpy as np

from src.config import PredictorConfig, SynthesisConfig
from src.models.errors import Errors, StabilizerError
from src.models.morphable import ModelData
from src.models.predictor import PredictorWeights, TrainingLogRecord
from src.models.synthesis import Dataset, ExpressionLibrary, IdentityDistribution
from src.predictor.network import flatten_blocks, init_weights, loss_and_gradients, predict_batch
from src.synthesis.generator import synthesize_indexed

logger = logging.getLogger(__name__)

Batch = tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]

VALIDATION_CHUNK = 256


class BatchSource(Protocol):
    """Yields (xs, xt, gt_rotations, gt_translations) for an iteration."""

    n_points: int
    mask: str

    def batch(self, iteration: int, size: int, seed: int) -> Batch: ...


class DatasetBatches:
    """Uniform mini-batches from a fixed dataset; the draw depends only on (seed, iteration)."""

    def __init__(self, dataset: Dataset, input_scale: float = 1.0):
        if len(dataset) == 0:
            raise StabilizerError(Errors.EMPTY_INPUT, "training dataset is empty")
        self.n_points = dataset.header.n_points
        self.mask = dataset.header.mask
        self.xs = flatten_blocks(dataset.sources) * input_scale
        self.xt = flatten_blocks(dataset.targets) * input_scale
        self.gt_rotations = dataset.gts[:, :3, :3]
        self.gt_translations = dataset.gts[:, :3, 3]

    def batch(self, iteration: int, size: int, seed: int) -> Batch:
        rng = np.random.default_rng([seed, iteration])
        idx = rng.integers(0, self.xs.shape[0], size=size)
        return self.xs[idx], self.xt[idx], self.gt_rotations[idx], self.gt_translations[idx]


class OnlineBatches:
    """Fresh synthetic pairs every iteration (sample k of the stream seeded by cfg.seed)."""

    def __init__(
        self,
        cfg: SynthesisConfig,
        psi: ModelData,
        dist: IdentityDistribution,
        library: ExpressionLibrary,
        input_scale: float = 1.0,
    ):
        self.cfg = cfg
        self.psi = psi
        self.dist = dist
        self.library = library
        self.input_scale = input_scale
        self.mask = cfg.mask
        self.n_points = len(psi.masks[cfg.mask])

    def batch(self, iteration: int, size: int, seed: int) -> Batch:
        samples = [
            synthesize_indexed(self.cfg, self.psi, self.dist, self.library, iteration * size + j).sample
            for j in range(size)
        ]
        xs = flatten_blocks(np.stack([s.source for s in samples])) * self.input_scale
        xt = flatten_blocks(np.stack([s.target for s in samples])) * self.input_scale
        gts = np.stack([s.gt.matrix for s in samples])
        return xs, xt, gts[:, :3, :3], gts[:, :3, 3]


def validation_error(omega: PredictorWeights, dataset: Dataset) -> float:
    """Mean vertex distance between predicted and ground-truth stabilized source blocks."""
    points = dataset.sources.astype(np.float64)
    xs = flatten_blocks(dataset.sources) * omega.config.input_scale
    xt = flatten_blocks(dataset.targets) * omega.config.input_scale
    total = 0.0
    for start in range(0, len(dataset), VALIDATION_CHUNK):
        sl = slice(start, start + VALIDATION_CHUNK)
        rotations, translations = predict_batch(omega, xs[sl], xt[sl])
        gts = dataset.gts[sl]
        diff = np.einsum("bij,bjn->bin", rotations - gts[:, :3, :3], points[sl])
        diff += (translations - gts[:, :3, 3])[:, :, None]
        total += float(np.linalg.norm(diff, axis=1).sum())
    return total / (len(dataset) * dataset.header.n_points)


def adam_step(omega: PredictorWeights, grads: list[np.ndarray]) -> None:
    """One in-place Adam update; bias correction uses the post-increment iteration count."""
    cfg = omega.config
    omega.iteration += 1
    t = omega.iteration
    correction1 = 1.0 - cfg.adam_beta1**t
    correction2 = 1.0 - cfg.adam_beta2**t
    for p, g, m, v in zip(omega.parameters(), grads, omega.adam_m, omega.adam_v):
        m *= cfg.adam_beta1
        m += (1.0 - cfg.adam_beta1) * g
        v *= cfg.adam_beta2
        v += (1.0 - cfg.adam_beta2) * g * g
        p -= cfg.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + cfg.adam_eps)


class PredictorTrainer:
    """Runs the configured number of Adam iterations on a batch source"""

    def __init__(
        self,
        config: PredictorConfig,
        log_path: Path | None = None,
        on_diverge: Callable[[PredictorWeights], None] | None = None,
    ):
        self.config = config
        self.log_path = log_path
        self.on_diverge = on_diverge
        self.log: list[TrainingLogRecord] = []

    def _write_log(self, record: TrainingLogRecord, fresh: bool) -> None:
        self.log.append(record)
        if self.log_path is None:
            return
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        mode = "w" if fresh and len(self.log) == 1 else "a"
        with open(self.log_path, mode, encoding="utf-8") as f:
            f.write(record.model_dump_json() + "\n")

    def train(
        self,
        source: BatchSource,
        validation: Dataset | None = None,
        weights: PredictorWeights | None = None,
        model_digest: str = "",
        dataset_digest: str = "",
    ) -> PredictorWeights:
        cfg = self.config
        if weights is None:
            omega = init_weights(cfg, 3 * source.n_points, source.mask, model_digest)
            omega.dataset_digest = dataset_digest
        else:
            omega = self._resume(weights, source, dataset_digest)
        fresh = omega.iteration == 0
        last_good = copy.deepcopy(omega)
        batch_size = omega.config.batch_size
        logger.info(
            "Training from iteration %d to %d (batch %d, lr %g)",
            omega.iteration,
            cfg.iterations,
            batch_size,
            omega.config.learning_rate,
        )

        while omega.iteration < cfg.iterations:
            i = omega.iteration
            xs, xt, gt_r, gt_t = source.batch(i, batch_size, omega.config.seed)
            try:
                result, grads = loss_and_gradients(omega, xs, xt, gt_r, gt_t)
            except StabilizerError as e:
                self._diverged(last_good, i, str(e))
            if not np.isfinite(result.total) or not all(np.all(np.isfinite(g)) for g in grads):
                self._diverged(last_good, i, f"non-finite loss {result.total}")
            adam_step(omega, grads)

            done = omega.iteration
            should_log = done % cfg.log_every == 0 or done == cfg.iterations
            should_validate = validation is not None and (
                done % cfg.validate_every == 0 or done == cfg.iterations
            )
            if should_log or should_validate:
                if not omega.is_finite():
                    self._diverged(last_good, i, "non-finite weights")
                md = validation_error(omega, validation) if should_validate else None
                record = TrainingLogRecord(
                    iteration=done,
                    loss=result.total,
                    loss_rotation=result.rotation,
                    loss_translation=result.translation,
                    validation_md=md,
                )
                self._write_log(record, fresh)
                last_good = copy.deepcopy(omega)
                if md is not None:
                    logger.info("iter %d loss %.5f val m_d %.4f mm", done, result.total, md)
                else:
                    logger.debug("iter %d loss %.5f", done, result.total)
        return omega

    def _resume(
        self, omega: PredictorWeights, source: BatchSource, dataset_digest: str
    ) -> PredictorWeights:
        """Check a checkpoint against the data; only the schedule length may change."""
        if omega.input_dim != 3 * source.n_points:
            raise StabilizerError(
                Errors.SHAPE_MISMATCH,
                f"checkpoint expects {omega.n_points} points, data has {source.n_points}",
                checkpoint=omega.n_points,
                data=source.n_points,
            )
        kept = {
            name: getattr(omega.config, name)
            for name in ("batch_size", "learning_rate", "seed")
            if getattr(omega.config, name) != getattr(self.config, name)
        }
        if kept:
            logger.warning("Resuming with the checkpoint's settings %s, ignoring the run config", kept)
        if omega.dataset_digest and dataset_digest and omega.dataset_digest != dataset_digest:
            logger.warning(
                "Checkpoint was trained on dataset %s..., resuming on %s...",
                omega.dataset_digest[:12],
                dataset_digest[:12],
            )
        omega.config = omega.config.model_copy(update={"iterations": self.config.iterations})
        return omega

    def _diverged(self, last_good: PredictorWeights, iteration: int, reason: str) -> NoReturn:
        if self.on_diverge is not None:
            self.on_diverge(last_good)
        raise StabilizerError(
            Errors.TRAINING_DIVERGED,
            f"training diverged at iteration {iteration}: {reason}",
            iteration=iteration,
            last_good_iteration=last_good.iteration,
        )


def train(
    config: PredictorConfig,
    dataset: Dataset,
    validation: Dataset | None = None,
    weights: PredictorWeights | None = None,
    log_path: Path | None = None,
    on_diverge: Callable[[PredictorWeights], None] | None = None,
    dataset_digest: str = "",
) -> tuple[PredictorWeights, list[TrainingLogRecord]]:
    """Train (or resume) on a fixed dataset; returns the weights and the log records.

    ``dataset_digest`` is the sha256 of the dataset file, recorded in the weights.
    """
    trainer = PredictorTrainer(config, log_path=log_path, on_diverge=on_diverge)
    scale = weights.config.input_scale if weights is not None else config.input_scale
    omega = trainer.train(
        DatasetBatches(dataset, scale),
        validation,
        weights,
        dataset.header.model_digest,
        dataset_digest,
    )
    return omega, trainer.log
