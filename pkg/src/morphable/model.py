# src/morphable/model.py
"""Forward evaluation of the morphable head model M_Psi(Theta)."""

from collections.abc import Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from src.models.errors import Errors, StabilizerError
from src.models.geometry import RigidTransform
from src.models.morphable import HEAD, REGION_NAMES, ModelData, ModelParams, RegionMask


def _check_size(name: str, values: np.ndarray, expected: int) -> None:
    if values.shape != (expected,):
        raise StabilizerError(
            Errors.SHAPE_MISMATCH,
            f"{name} has {values.shape[0] if values.ndim else 0} entries, model expects {expected}",
            parameter=name,
            expected=expected,
        )


def bind_pose(psi: ModelData, beta, phi) -> tuple[np.ndarray, np.ndarray]:
    """Bind-pose vertices T + sum(beta I) + sum(phi E) and joints J + sum(beta Q)."""
    beta = np.asarray(beta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    _check_size("beta", beta, psi.n_identity)
    _check_size("phi", phi, psi.n_expression)
    v_bind = (
        psi.template
        + np.tensordot(beta, psi.identity_basis, axes=1)
        + np.tensordot(phi, psi.expression_basis, axes=1)
    )
    j_bind = psi.joints + np.tensordot(beta, psi.joint_identity_basis, axes=1)
    return v_bind, j_bind


def _resolution_order(parents: np.ndarray) -> list[int]:
    """Joints ordered so every parent precedes its children."""
    k = len(parents)
    order: list[int] = []
    state = [0] * k  # 0 new, 1 on stack, 2 done
    for start in range(k):
        stack = []
        j = start
        while j != -1 and state[j] == 0:
            state[j] = 1
            stack.append(j)
            p = int(parents[j])
            if p < -1 or p >= k:
                raise StabilizerError(
                    Errors.INVALID_HIERARCHY, f"joint {j} has invalid parent {p}", joint=j
                )
            j = p
        if j != -1 and state[j] == 1:
            raise StabilizerError(
                Errors.INVALID_HIERARCHY, "kinematic hierarchy contains a cycle", joint=j
            )
        for node in reversed(stack):
            state[node] = 2
            order.append(node)
    return order


def skinning_transforms(
    j_bind: np.ndarray, theta, tau, parents: Sequence[int]
) -> list[RigidTransform]:
    """Per-joint bind-relative skinning transforms X_k.

    Each joint rotates about its bind location and inherits its parent's
    transform; the root is additionally translated by tau.
    """
    parents = np.asarray(parents, dtype=np.int64)
    # scipy rejects read-only buffers, and ModelParams arrays are frozen
    theta = np.array(theta, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    k = j_bind.shape[1]
    if len(parents) != k or theta.shape != (k, 3):
        raise StabilizerError(
            Errors.SHAPE_MISMATCH,
            f"hierarchy/rotations do not match {k} joints",
            parents=len(parents),
            theta=list(theta.shape),
        )
    rotations = Rotation.from_rotvec(theta).as_matrix()
    joints = j_bind[:3]
    world: list[np.ndarray | None] = [None] * k
    for j in _resolution_order(parents):
        local = np.eye(4)
        local[:3, :3] = rotations[j]
        local[:3, 3] = joints[:, j] - rotations[j] @ joints[:, j]
        if parents[j] == -1:
            local[:3, 3] += tau
            world[j] = local
        else:
            world[j] = world[parents[j]] @ local
    return [RigidTransform(matrix=m) for m in world]


def lbs(v_bind: np.ndarray, transforms: Sequence[RigidTransform], weights: np.ndarray) -> np.ndarray:
    """Linear blend skinning: v' = sum_k w_kv X_k v.

    Written as v + sum_k w_kv (X_k - I) v, which is exact for identity
    transforms and keeps the homogeneous row at one.
    """
    deltas = np.stack([x.matrix for x in transforms]) - np.eye(4)
    blend = np.einsum("kn,kij->nij", weights, deltas)
    return v_bind + np.einsum("nij,jn->in", blend, v_bind)


def pose(psi: ModelData, params: ModelParams) -> tuple[np.ndarray, list[RigidTransform]]:
    """Bind-pose vertices and skinning transforms for a parameter set."""
    v_bind, j_bind = bind_pose(psi, params.beta, params.phi)
    transforms = skinning_transforms(j_bind, params.theta, params.tau, psi.parents)
    return v_bind, transforms


def model_forward(psi: ModelData, params: ModelParams) -> np.ndarray:
    """Posed skin vertices M_Psi(Theta), a (4, N) block."""
    v_bind, transforms = pose(psi, params)
    return lbs(v_bind, transforms, psi.skinning_weights)


def head_transform(psi: ModelData, params: ModelParams) -> RigidTransform:
    """Skinning transform of the head joint (independent of phi)."""
    _, j_bind = bind_pose(psi, params.beta, np.zeros(psi.n_expression))
    return skinning_transforms(j_bind, params.theta, params.tau, psi.parents)[HEAD]


def skull_forward(psi: ModelData, params: ModelParams) -> np.ndarray:
    """Skull points carried rigidly by the head joint."""
    return head_transform(psi, params).matrix @ psi.skull


def repose_rigid(psi: ModelData, params: ModelParams, z: RigidTransform) -> ModelParams:
    """Parameters whose forward output is Z applied to the original output.

    Z is folded into the root joint: R0' = Rz R0 and tau chosen so the root
    skinning transform becomes Z . X_root.
    """
    _, j_bind = bind_pose(psi, params.beta, params.phi)
    j0 = j_bind[:3, 0]
    r0 = Rotation.from_rotvec(np.array(params.theta[0], dtype=np.float64)).as_matrix()
    r0_new = z.rotation @ r0
    tau_new = z.rotation @ (params.tau + j0 - r0 @ j0) + z.translation - j0 + r0_new @ j0
    theta = np.array(params.theta)
    theta[0] = Rotation.from_matrix(r0_new).as_rotvec()
    return params.replace(theta=theta, tau=tau_new)


def region_mask(psi: ModelData, name: str) -> RegionMask:
    if name not in REGION_NAMES:
        raise StabilizerError(
            Errors.UNKNOWN_REGION,
            f"Unknown region '{name}', expected one of {', '.join(REGION_NAMES)}",
            region=name,
        )
    return RegionMask(name=name, indices=psi.masks[name])


def masked(block: np.ndarray, mask: RegionMask) -> np.ndarray:
    return block[:, mask.indices]
