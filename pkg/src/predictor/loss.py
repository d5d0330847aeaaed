# src/predictor/loss.py
"""L = |R_gt - R|_F + alpha_t |t_gt - t| with analytic gradients."""

import numpy as np

from src.geometry.rotation6d import decode_backward, decode_batch, rot6d_encode
from src.models.geometry import RigidTransform
from src.models.predictor import PoseLoss

# Rotation norms below this are treated as zero (subgradient 0 at the optimum)
ZERO_NORM = 1e-15


def pose_loss(
    rotations: np.ndarray,
    translations: np.ndarray,
    gt_rotations: np.ndarray,
    gt_translations: np.ndarray,
    alpha_t: float,
) -> tuple[PoseLoss, np.ndarray, np.ndarray]:
    """Batch-mean loss and gradients w.r.t. the decoded (B, 3, 3) rotations and (B, 3) translations."""
    batch = rotations.shape[0]
    dr = rotations - gt_rotations
    dt = translations - gt_translations
    r_norm = np.sqrt(np.sum(dr * dr, axis=(1, 2)))
    t_norm = np.linalg.norm(dt, axis=1)

    r_scale = np.where(r_norm > ZERO_NORM, 1.0 / np.maximum(r_norm, ZERO_NORM), 0.0)
    t_scale = np.where(t_norm > ZERO_NORM, 1.0 / np.maximum(t_norm, ZERO_NORM), 0.0)
    grad_r = dr * r_scale[:, None, None] / batch
    grad_t = alpha_t * dt * t_scale[:, None] / batch

    rotation = float(r_norm.mean())
    translation = float(t_norm.mean())
    result = PoseLoss(
        total=rotation + alpha_t * translation, rotation=rotation, translation=translation
    )
    return result, grad_r, grad_t


def raw_loss(
    raw: np.ndarray, gt_rotations: np.ndarray, gt_translations: np.ndarray, alpha_t: float
) -> tuple[PoseLoss, np.ndarray]:
    """Loss on raw (B, 9) regressor outputs (6D rotation, then translation) and its gradient."""
    rotations, cache = decode_batch(raw[:, :6])
    result, grad_r, grad_t = pose_loss(
        rotations, raw[:, 6:9], gt_rotations, gt_translations, alpha_t
    )
    grad_raw = np.concatenate([decode_backward(grad_r, cache), grad_t], axis=1)
    return result, grad_raw


def encode_raw(transform: RigidTransform) -> np.ndarray:
    """The 9 raw numbers a regressor would emit for ``transform``."""
    return np.concatenate([rot6d_encode(transform.rotation), transform.translation])


def loss(
    predicted: RigidTransform, gt: RigidTransform, alpha_t: float = 1.0
) -> tuple[PoseLoss, np.ndarray]:
    """Loss of one prediction plus its gradient w.r.t. the 9 raw outputs."""
    result, grad = raw_loss(
        encode_raw(predicted)[None, :], gt.rotation[None], gt.translation[None], alpha_t
    )
    return result, grad[0]
