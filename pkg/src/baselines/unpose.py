# src/baselines/unpose.py
"""Stabilization from known model parameters.

With exact parameters both meshes share a bind-pose skull, so mapping the
source head frame onto the target head frame aligns the skulls exactly.
Fitting error in real captures is modelled by perturbing the pose.
"""

import numpy as np

from src.geometry.rigid import compose, invert
from src.models.geometry import RigidTransform
from src.models.morphable import ModelData, ModelParams
from src.morphable.model import head_transform

# One noise level is 1 degree of joint rotation and 1 mm of root translation
NOISE_DEGREES = 1.0
NOISE_MM = 1.0


def unpose_baseline(theta_s: ModelParams, theta_t: ModelParams, psi: ModelData) -> RigidTransform:
    """X_head(theta_t) . X_head(theta_s)^-1"""
    return compose(head_transform(psi, theta_t), invert(head_transform(psi, theta_s)))


def perturb_pose(params: ModelParams, level: float, rng: np.random.Generator) -> ModelParams:
    """Gaussian noise on every joint rotation and on the root translation."""
    if level <= 0:
        return params
    theta = params.theta + rng.normal(0.0, np.deg2rad(NOISE_DEGREES) * level, params.theta.shape)
    tau = params.tau + rng.normal(0.0, NOISE_MM * level, 3)
    return params.replace(theta=theta, tau=tau)
