# src/predictor/stabilizer.py
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from src.geometry.rigid import apply, compose, invert
from src.models.geometry import RigidTransform
from src.models.morphable import ModelData
from src.models.predictor import PredictorWeights
from src.predictor.network import predict
from src.synthesis.generator import prealign

logger = logging.getLogger(__name__)


def stabilize_pair(
    omega: PredictorWeights, vs_full: np.ndarray, vt_full: np.ndarray, psi: ModelData
) -> tuple[RigidTransform, np.ndarray]:
    """Predict the skull-aligning transform of a full-mesh pair in the inputs' world frame.

    The prediction lives in the pre-aligned frame, so it is conjugated back:
    S_world = A_t^-1 . S . A_s.
    """
    aligned = prealign(vs_full, vt_full, psi, omega.mask)
    s = predict(omega, aligned.source, aligned.target)
    world = compose(invert(aligned.align_target), compose(s, aligned.align_source))
    return world, apply(world, vs_full)


def stabilize_batch(
    omega: PredictorWeights,
    pairs: list[tuple[np.ndarray, np.ndarray]],
    psi: ModelData,
    workers: int = 1,
) -> list[tuple[RigidTransform, np.ndarray]]:
    """Stabilize independent pairs concurrently; results keep the input order."""
    logger.info("Stabilizing %d pairs with %d workers", len(pairs), workers)
    if workers <= 1:
        return [stabilize_pair(omega, vs, vt, psi) for vs, vt in pairs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda pair: stabilize_pair(omega, pair[0], pair[1], psi), pairs))
