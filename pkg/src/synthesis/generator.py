# src/synthesis/generator.py
"""Training-pair synthesis.

Both meshes of a pair share one identity and differ in expression (and
optionally jaw opening). Their skulls therefore coincide before
pre-alignment, which turns the pre-alignment transforms into an exact
ground truth for the stabilizing transform.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from src.config import SynthesisConfig
from src.geometry.procrustes import procrustes_transform
from src.geometry.rigid import apply, check_block, compose, invert, sample_random_rigid
from src.models.errors import Errors, StabilizerError
from src.models.geometry import RigidTransform
from src.models.morphable import JAW, ModelData, ModelParams
from src.models.synthesis import (
    Dataset,
    DatasetHeader,
    ExpressionLibrary,
    IdentityDistribution,
    PreAlignment,
    SyntheticPair,
    TrainingSample,
)
from src.morphable.model import masked, model_forward, region_mask, repose_rigid, skull_forward
from src.repositories.dataset_repository import DatasetRepository
from src.synthesis.priors import build_priors

logger = logging.getLogger(__name__)


def neutral_reference(psi: ModelData, mask: str) -> np.ndarray:
    """Masked template translated so its centroid is the origin (T-hat)."""
    block = np.array(masked(psi.template, region_mask(psi, mask)))
    block[:3] -= block[:3].mean(axis=1, keepdims=True)
    return block


def prealign(
    vs_full: np.ndarray,
    vt_full: np.ndarray,
    psi: ModelData,
    mask: str,
    noise_source: RigidTransform | None = None,
    noise_target: RigidTransform | None = None,
) -> PreAlignment:
    """Mask both meshes, fit the target to T-hat and the source to the fitted target.

    Optional noise transforms are left-multiplied onto each fit, mimicking an
    imperfect real-world pre-alignment.
    """
    vs_full = check_block(vs_full, "source")
    vt_full = check_block(vt_full, "target")
    if vs_full.shape != vt_full.shape or vs_full.shape[1] != psi.n_vertices:
        raise StabilizerError(
            Errors.SHAPE_MISMATCH,
            f"meshes must both have {psi.n_vertices} vertices, "
            f"got {vs_full.shape[1]} and {vt_full.shape[1]}",
        )
    region = region_mask(psi, mask)
    vs_masked = masked(vs_full, region)
    vt_masked = masked(vt_full, region)
    noise_source = noise_source or RigidTransform.identity()
    noise_target = noise_target or RigidTransform.identity()

    align_target = compose(noise_target, procrustes_transform(vt_masked, neutral_reference(psi, mask)))
    target = apply(align_target, vt_masked)
    align_source = compose(noise_source, procrustes_transform(vs_masked, target))
    source = apply(align_source, vs_masked)
    return PreAlignment(
        source=source, target=target, align_source=align_source, align_target=align_target
    )


def preprocess_pair(
    vs_full: np.ndarray, vt_full: np.ndarray, psi: ModelData, mask: str = "frontal"
) -> tuple[np.ndarray, np.ndarray]:
    """Pre-aligned (V-hat_s, V-hat_t) for a pair of full meshes."""
    aligned = prealign(vs_full, vt_full, psi, mask)
    return aligned.source, aligned.target


def _jaw_params(base: ModelParams, angle: float) -> ModelParams:
    if angle == 0.0:
        return base
    theta = np.array(base.theta)
    theta[JAW] = [angle, 0.0, 0.0]
    return base.replace(theta=theta)


def synthesize_pair(
    cfg: SynthesisConfig,
    psi: ModelData,
    dist: IdentityDistribution,
    library: ExpressionLibrary,
    rng: np.random.Generator,
    seed: int = 0,
) -> SyntheticPair:
    """One pair with full geometry, parameters, skulls and ground truth."""
    # Draw order is part of the replay contract
    beta = rng.uniform(dist.mean - 3.0 * dist.std, dist.mean + 3.0 * dist.std)
    n_expr = library.entries.shape[1]
    phi_s = library.entries[rng.integers(len(library))] + rng.normal(0.0, cfg.eps_expr, n_expr)
    phi_t = library.entries[rng.integers(len(library))] + rng.normal(0.0, cfg.eps_expr, n_expr)
    noise_s = sample_random_rigid(cfg.eps_r, cfg.eps_t, rng)
    noise_t = sample_random_rigid(cfg.eps_r, cfg.eps_t, rng)
    jaw_s, jaw_t = np.abs(rng.normal(0.0, cfg.jaw_rotation_std, size=2))

    zero = psi.zero_params()
    raw_s = _jaw_params(zero.replace(beta=beta, phi=phi_s), float(jaw_s))
    raw_t = _jaw_params(zero.replace(beta=beta, phi=phi_t), float(jaw_t))
    vs_raw = model_forward(psi, raw_s)
    vt_raw = model_forward(psi, raw_t)

    aligned = prealign(vs_raw, vt_raw, psi, cfg.mask, noise_s, noise_t)
    gt = compose(aligned.align_target, invert(aligned.align_source))

    params_s = repose_rigid(psi, raw_s, aligned.align_source)
    params_t = repose_rigid(psi, raw_t, aligned.align_target)
    return SyntheticPair(
        source_full=apply(aligned.align_source, vs_raw),
        target_full=apply(aligned.align_target, vt_raw),
        params_source=params_s,
        params_target=params_t,
        skull_source=skull_forward(psi, params_s),
        skull_target=skull_forward(psi, params_t),
        align_source=aligned.align_source,
        align_target=aligned.align_target,
        sample=TrainingSample(source=aligned.source, target=aligned.target, gt=gt, seed=seed),
    )


def generate_sample(
    cfg: SynthesisConfig,
    psi: ModelData,
    dist: IdentityDistribution,
    library: ExpressionLibrary,
    rng: np.random.Generator,
    seed: int = 0,
) -> TrainingSample:
    """Preprocessed training pair with its ground-truth transform."""
    return synthesize_pair(cfg, psi, dist, library, rng, seed).sample


def derive_sample_seed(master: int, index: int) -> int:
    """Counter-based per-sample seed; independent of generation order."""
    state = np.random.SeedSequence(master, spawn_key=(index,)).generate_state(1, np.uint64)
    return int(state[0])


def synthesize_indexed(
    cfg: SynthesisConfig,
    psi: ModelData,
    dist: IdentityDistribution,
    library: ExpressionLibrary,
    index: int,
) -> SyntheticPair:
    """Pair number ``index`` of the stream seeded by ``cfg.seed``."""
    seed = derive_sample_seed(cfg.seed, index)
    return synthesize_pair(cfg, psi, dist, library, np.random.default_rng(seed), seed)


def _generate_chunk(args) -> list[TrainingSample]:
    cfg, psi, dist, library, indices = args
    return [synthesize_indexed(cfg, psi, dist, library, i).sample for i in indices]


def generate_dataset(
    cfg: SynthesisConfig,
    psi: ModelData,
    dist: IdentityDistribution,
    library: ExpressionLibrary,
    model_digest: str = "",
    output: Path | None = None,
) -> Dataset:
    """Generate ``cfg.count`` samples; content does not depend on ``cfg.workers``."""
    indices = list(range(cfg.count))
    if cfg.workers > 1 and cfg.count > 1:
        chunks = [indices[w :: cfg.workers] for w in range(cfg.workers)]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_generate_chunk, [(cfg, psi, dist, library, c) for c in chunks]))
        by_index = {i: s for chunk, part in zip(chunks, parts) for i, s in zip(chunk, part)}
        samples = [by_index[i] for i in indices]
    else:
        samples = _generate_chunk((cfg, psi, dist, library, indices))

    header = DatasetHeader(
        count=len(samples),
        n_points=samples[0].n_points,
        mask=cfg.mask,
        config=cfg.model_dump(mode="json", exclude={"workers"}),
        model_digest=model_digest,
    )
    dataset = Dataset.from_samples(header, samples)
    logger.info("Generated %d samples (%d points each)", len(samples), header.n_points)

    if output is not None:
        DatasetRepository(output).save(dataset)
    return dataset


def regenerate_pairs(dataset: Dataset, psi: ModelData) -> list[SyntheticPair]:
    """Rebuild full synthetic records from the seeds stored in a dataset."""
    cfg = SynthesisConfig.model_validate(dataset.header.config)
    dist, library = build_priors(cfg, psi)
    pairs = []
    for seed in dataset.seeds:
        seed = int(seed)
        pairs.append(synthesize_pair(cfg, psi, dist, library, np.random.default_rng(seed), seed))
    return pairs
