# src/services/evaluation.py
import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from src.config import EvaluationConfig
from src.geometry.rigid import apply
from src.models.errors import Errors, StabilizerError
from src.models.evaluation import EvalReport, RegionMetrics, SkullSummary
from src.models.geometry import RigidTransform
from src.models.morphable import ModelData
from src.models.synthesis import SyntheticPair
from src.morphable.model import masked, region_mask

logger = logging.getLogger(__name__)

# A stabilization method: full synthetic pair -> source-to-target transform (world frame)
Stabilizer = Callable[[SyntheticPair], RigidTransform]


def vertex_errors(pred: Sequence[np.ndarray], gt: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Per-sample vectors of per-vertex Euclidean distances (mm)."""
    if len(pred) != len(gt) or len(pred) == 0:
        raise StabilizerError(
            Errors.SHAPE_MISMATCH,
            f"need matching nonempty sample lists, got {len(pred)} and {len(gt)}",
        )
    errors = []
    for p, g in zip(pred, gt):
        p = np.asarray(p, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        if p.shape != g.shape:
            raise StabilizerError(
                Errors.SHAPE_MISMATCH, f"block shapes differ: {p.shape} vs {g.shape}"
            )
        errors.append(np.linalg.norm(p[:3] - g[:3], axis=0))
    return errors


def mean_vertex_distance(
    pred: Sequence[np.ndarray], gt: Sequence[np.ndarray]
) -> tuple[float, float]:
    """m_d: mean over all vertices of all samples, with the pooled population std."""
    pooled = np.concatenate(vertex_errors(pred, gt))
    return float(pooled.mean()), float(pooled.std())


def max_vertex_distance(pred: Sequence[np.ndarray], gt: Sequence[np.ndarray]) -> float:
    """m_x: per-sample maximum vertex distance, averaged over samples."""
    return float(np.mean([e.max() for e in vertex_errors(pred, gt)]))


def pck_thresholds(range_mm: tuple[float, float] = (0.0, 5.0), resolution: int = 100) -> np.ndarray:
    if resolution < 2:
        raise StabilizerError(Errors.INVALID_CONFIG, "PCK resolution must be >= 2")
    return np.linspace(range_mm[0], range_mm[1], resolution)


def pck_from_errors(
    errors: np.ndarray, range_mm: tuple[float, float] = (0.0, 5.0), resolution: int = 100
) -> tuple[np.ndarray, float]:
    thresholds = pck_thresholds(range_mm, resolution)
    ordered = np.sort(np.asarray(errors).ravel())
    curve = np.searchsorted(ordered, thresholds, side="right") / ordered.size
    auc = np.trapezoid(curve, thresholds) / (thresholds[-1] - thresholds[0]) * 100.0
    return curve, float(np.clip(auc, 0.0, 100.0))


def pck_auc(
    pred: Sequence[np.ndarray],
    gt: Sequence[np.ndarray],
    range_mm: tuple[float, float] = (0.0, 5.0),
    resolution: int = 100,
) -> tuple[np.ndarray, float]:
    """PCK curve (fraction of vertices with error <= threshold) and its normalized AUC in percent."""
    return pck_from_errors(np.concatenate(vertex_errors(pred, gt)), range_mm, resolution)


def skull_energy(s: RigidTransform, ws: np.ndarray, wt: np.ndarray) -> float:
    """RMS distance between the transformed source skull and the target skull (mm)."""
    ws = np.asarray(ws, dtype=np.float64)
    wt = np.asarray(wt, dtype=np.float64)
    if ws.shape != wt.shape:
        raise StabilizerError(
            Errors.SHAPE_MISMATCH, f"skull shapes differ: {ws.shape} vs {wt.shape}"
        )
    diff = apply(s, ws)[:3] - wt[:3]
    return float(np.sqrt(np.mean(np.sum(diff * diff, axis=0))))


class EvaluationService:
    """Runs stabilization methods over synthetic test pairs and scores them per region"""

    def __init__(
        self,
        pairs: list[SyntheticPair],
        psi: ModelData,
        config: EvaluationConfig | None = None,
        workers: int = 1,
    ):
        if not pairs:
            raise StabilizerError(Errors.EMPTY_INPUT, "evaluation needs at least one pair")
        self.pairs = pairs
        self.psi = psi
        self.config = config or EvaluationConfig()
        self.workers = workers
        self.masks = {name: region_mask(psi, name) for name in self.config.regions}

    def _transforms(self, method: Stabilizer) -> list[RigidTransform]:
        if self.workers <= 1:
            return [method(p) for p in self.pairs]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(method, self.pairs))

    def evaluate_method(self, name: str, method: Stabilizer) -> tuple[list[RegionMetrics], SkullSummary]:
        cfg = self.config
        transforms = self._transforms(method)
        predicted = [apply(s, p.source_full) for s, p in zip(transforms, self.pairs)]
        expected = [apply(p.gt, p.source_full) for p in self.pairs]

        rows = []
        for region, mask in self.masks.items():
            pred = [masked(v, mask) for v in predicted]
            gt = [masked(v, mask) for v in expected]
            md_mean, md_std = mean_vertex_distance(pred, gt)
            curve, auc = pck_auc(pred, gt, (cfg.pck_min_mm, cfg.pck_max_mm), cfg.pck_resolution)
            rows.append(
                RegionMetrics(
                    method=name,
                    region=region,
                    md_mean=md_mean,
                    md_std=md_std,
                    mx=max_vertex_distance(pred, gt),
                    auc=auc,
                    pck=curve.tolist(),
                )
            )

        energies = [
            skull_energy(s, p.skull_source, p.skull_target) for s, p in zip(transforms, self.pairs)
        ]
        skull = SkullSummary(
            method=name,
            mean=float(np.mean(energies)),
            median=float(np.median(energies)),
            values=energies,
        )
        logger.info(
            "%s: %s | skull median %.4f mm",
            name,
            ", ".join(f"{r.region} m_d {r.md_mean:.3f}" for r in rows),
            skull.median,
        )
        return rows, skull

    def evaluate(
        self,
        methods: dict[str, Stabilizer],
        config_echo: dict | None = None,
        inputs: dict[str, str] | None = None,
    ) -> EvalReport:
        rows: list[RegionMetrics] = []
        skulls: list[SkullSummary] = []
        for name, method in methods.items():
            method_rows, skull = self.evaluate_method(name, method)
            rows.extend(method_rows)
            skulls.append(skull)
        cfg = self.config
        return EvalReport(
            samples=len(self.pairs),
            thresholds=pck_thresholds(
                (cfg.pck_min_mm, cfg.pck_max_mm), cfg.pck_resolution
            ).tolist(),
            rows=rows,
            skull=skulls,
            config=config_echo or {},
            inputs=inputs or {},
        )


def evaluate_method(
    method: Stabilizer,
    pairs: list[SyntheticPair],
    psi: ModelData,
    config: EvaluationConfig | None = None,
    name: str = "method",
) -> EvalReport:
    """Score one method on the configured regions."""
    return EvaluationService(pairs, psi, config).evaluate({name: method})
