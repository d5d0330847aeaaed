# src/baselines/cmap.py
"""Learned per-vertex confidence map for weighted Procrustes.

Energy (per pair) over weights w on one region of N vertices:

  data  |P(W.Us, W.Ut) W.Us - W.Ut|_F^2   (= sum_i w_i^2 r_i^2)
  reg   max(0, rho N - |w|^2)
  sigma -std(w)
  nbhd  mean over vertices of the std of w on their k nearest bind-pose neighbours

Training alternates: align with the current weights, then take a gradient
step on w with that alignment held fixed. data and reg are divided by N so
one step size works across region sizes.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from src.config import CmapConfig, CmapVariant
from src.geometry.procrustes import weighted_procrustes, weighted_residuals
from src.geometry.rigid import apply
from src.models.baselines import CmapLosses, ConfidenceMap
from src.models.errors import Errors, StabilizerError
from src.models.geometry import RigidTransform
from src.models.morphable import ModelData
from src.models.synthesis import SyntheticPair
from src.morphable.model import masked, region_mask
from src.services.evaluation import mean_vertex_distance

logger = logging.getLogger(__name__)

INITIAL_WEIGHT = 0.5


def uniform_map(psi: ModelData, region: str) -> ConfidenceMap:
    """All-ones map: weighted Procrustes reduces to plain Procrustes on the region."""
    return ConfidenceMap(region=region, weights=np.ones(len(region_mask(psi, region))))


def neighbourhoods(psi: ModelData, region: str, k: int) -> np.ndarray:
    """(N, k) region-local indices of each vertex's nearest neighbours, self included."""
    points = masked(psi.template, region_mask(psi, region))[:3].T
    k = min(k, len(points))
    _, idx = cKDTree(points).query(points, k=k)
    return np.asarray(idx, dtype=np.int64).reshape(len(points), k)


def term_weights(cfg: CmapConfig) -> tuple[float, float, float, float]:
    """(alpha_data, alpha_reg, alpha_sigma, alpha_nbhd) with the variant's terms switched off."""
    sigma = cfg.alpha_sigma if cfg.variant != CmapVariant.ORIGINAL else 0.0
    nbhd = cfg.alpha_nbhd if cfg.variant == CmapVariant.CONTRAST_CONSISTENT else 0.0
    return cfg.alpha_data, cfg.alpha_reg, sigma, nbhd


def _data_term(w: np.ndarray, us: np.ndarray, ut: np.ndarray) -> tuple[float, np.ndarray]:
    """Data energy and its gradient with the alignment held fixed."""
    if not np.any(w > 0):
        return 0.0, np.zeros_like(w)
    s = weighted_procrustes(us, ut, w)
    r2 = weighted_residuals(s, us, ut)
    return float(np.sum(w * w * r2)), 2.0 * w * r2


def _reg_term(w: np.ndarray, rho: float) -> tuple[float, np.ndarray]:
    slack = rho * w.size - float(w @ w)
    if slack <= 0:
        return 0.0, np.zeros_like(w)
    return slack, -2.0 * w


def _sigma_term(w: np.ndarray) -> tuple[float, np.ndarray]:
    std = float(w.std())
    if std == 0.0:
        return 0.0, np.zeros_like(w)
    return -std, -(w - w.mean()) / (w.size * std)


def _nbhd_term(w: np.ndarray, neighbours: np.ndarray) -> tuple[float, np.ndarray]:
    values = w[neighbours]
    k = neighbours.shape[1]
    means = values.mean(axis=1, keepdims=True)
    stds = values.std(axis=1)
    grad = np.zeros_like(w)
    active = stds > 0
    if np.any(active):
        local = (values[active] - means[active]) / (k * stds[active, None])
        np.add.at(grad, neighbours[active], local)
    n = neighbours.shape[0]
    return float(stds.mean()), grad / n


def cmap_losses(
    w,
    us: np.ndarray,
    ut: np.ndarray,
    cfg: CmapConfig,
    neighbours: np.ndarray,
) -> CmapLosses:
    """The four energy terms for one pair (unweighted, unnormalized).

    ``neighbours`` is the bind-pose graph from ``neighbourhoods``, the same one
    training smooths over.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (np.asarray(us).shape[1],):
        raise StabilizerError(
            Errors.SHAPE_MISMATCH, f"expected {np.asarray(us).shape[1]} weights, got {w.shape}"
        )
    if neighbours.shape[0] != w.size:
        raise StabilizerError(
            Errors.SHAPE_MISMATCH,
            f"neighbourhood graph covers {neighbours.shape[0]} vertices, map has {w.size}",
        )
    data, _ = _data_term(w, us, ut)
    reg, _ = _reg_term(w, cfg.rho)
    sigma, _ = _sigma_term(w)
    nbhd, _ = _nbhd_term(w, neighbours)
    return CmapLosses(data=data, reg=reg, sigma=sigma, nbhd=nbhd)


@dataclass
class _Problem:
    region: str
    blocks: list[tuple[np.ndarray, np.ndarray]]
    neighbours: np.ndarray

    @property
    def size(self) -> int:
        return self.neighbours.shape[0]


def _problem(pairs: list[SyntheticPair], psi: ModelData, cfg: CmapConfig) -> _Problem:
    if not pairs:
        raise StabilizerError(Errors.EMPTY_INPUT, "confidence map training needs at least one pair")
    mask = region_mask(psi, cfg.region)
    blocks = [(masked(p.source_full, mask), masked(p.target_full, mask)) for p in pairs]
    return _Problem(cfg.region, blocks, neighbourhoods(psi, cfg.region, cfg.k))


def _objective_gradient(
    w: np.ndarray, batch: list[tuple[np.ndarray, np.ndarray]], problem: _Problem, cfg: CmapConfig
) -> tuple[float, np.ndarray]:
    a_data, a_reg, a_sigma, a_nbhd = term_weights(cfg)
    n = problem.size

    data = 0.0
    grad = np.zeros_like(w)
    for us, ut in batch:
        value, g = _data_term(w, us, ut)
        data += value
        grad += g
    data /= len(batch)
    grad *= a_data / (len(batch) * n)
    energy = a_data * data / n

    reg, g = _reg_term(w, cfg.rho)
    energy += a_reg * reg / n
    grad += a_reg * g / n
    if a_sigma:
        sigma, g = _sigma_term(w)
        energy += a_sigma * sigma
        grad += a_sigma * g
    if a_nbhd:
        nbhd, g = _nbhd_term(w, problem.neighbours)
        energy += a_nbhd * nbhd
        grad += a_nbhd * g
    return energy, grad


def _optimise(problem: _Problem, cfg: CmapConfig, step_size: float) -> np.ndarray:
    rng = np.random.default_rng(cfg.seed)
    w = np.full(problem.size, INITIAL_WEIGHT)
    batch_size = min(cfg.batch_size, len(problem.blocks))
    for step in range(cfg.steps):
        chosen = rng.choice(len(problem.blocks), size=batch_size, replace=False)
        energy, grad = _objective_gradient(w, [problem.blocks[i] for i in chosen], problem, cfg)
        w = np.clip(w - step_size * grad, 0.0, 1.0)
        if not np.isfinite(energy) or not np.all(np.isfinite(w)):
            raise StabilizerError(
                Errors.TRAINING_DIVERGED,
                f"confidence map became non-finite at step {step}",
                step=step,
                step_size=step_size,
            )
        if not np.any(w > 0):
            raise StabilizerError(
                Errors.TRAINING_DIVERGED,
                f"all confidence weights collapsed to zero at step {step}",
                step=step,
                step_size=step_size,
            )
        if step % 50 == 0 or step == cfg.steps - 1:
            logger.debug(
                "cmap step %d: energy %.5f, mean w %.3f, std w %.3f",
                step,
                energy,
                w.mean(),
                w.std(),
            )
    return w


def cmap_train(pairs: list[SyntheticPair], psi: ModelData, cfg: CmapConfig) -> ConfidenceMap:
    """Gradient descent on the weights, mini-batched over pairs, clamped to [0, 1]."""
    problem = _problem(pairs, psi, cfg)
    logger.info(
        "Training %s confidence map on %s (%d vertices, %d pairs, step %.0e)",
        cfg.variant.value,
        cfg.region,
        problem.size,
        len(pairs),
        cfg.step_size,
    )
    w = _optimise(problem, cfg, cfg.step_size)
    return ConfidenceMap(region=cfg.region, weights=w, variant=cfg.variant.value)


def cmap_stabilize(
    cmap: ConfidenceMap, vs_full: np.ndarray, vt_full: np.ndarray, psi: ModelData
) -> RigidTransform:
    """Weighted Procrustes on the map's region (world frame)."""
    mask = region_mask(psi, cmap.region)
    if len(mask) != len(cmap):
        raise StabilizerError(
            Errors.SHAPE_MISMATCH,
            f"map has {len(cmap)} weights, region '{cmap.region}' has {len(mask)} vertices",
        )
    return weighted_procrustes(masked(vs_full, mask), masked(vt_full, mask), cmap.weights)


def map_error(cmap: ConfidenceMap, pairs: list[SyntheticPair], psi: ModelData) -> float:
    """Mean vertex distance on the map's region after stabilizing each pair."""
    mask = region_mask(psi, cmap.region)
    pred = []
    gt = []
    for p in pairs:
        s = cmap_stabilize(cmap, p.source_full, p.target_full, psi)
        source = masked(p.source_full, mask)
        pred.append(apply(s, source))
        gt.append(apply(p.gt, source))
    return mean_vertex_distance(pred, gt)[0]


def select_step_size(
    train_pairs: list[SyntheticPair],
    val_pairs: list[SyntheticPair],
    psi: ModelData,
    cfg: CmapConfig,
) -> tuple[float, ConfidenceMap]:
    """Train once per grid step size; keep the map with the lowest validation error."""
    best: tuple[float, float, ConfidenceMap] | None = None
    for step_size in cfg.step_grid:
        trial = cfg.model_copy(update={"step_size": step_size})
        try:
            cmap = cmap_train(train_pairs, psi, trial)
        except StabilizerError as e:
            if e.code != Errors.TRAINING_DIVERGED:
                raise
            logger.warning("Step size %.0e diverged: %s", step_size, e)
            continue
        error = map_error(cmap, val_pairs, psi)
        logger.info("Step size %.0e: validation m_d %.4f mm", step_size, error)
        if best is None or error < best[1]:
            best = (step_size, error, cmap)
    if best is None:
        raise StabilizerError(
            Errors.TRAINING_DIVERGED,
            "confidence map training diverged for every step size",
            step_grid=cfg.step_grid,
        )
    return best[0], best[2]
