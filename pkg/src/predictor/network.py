# src/predictor/network.py
"""Feature extractor F and regressor R as plain numpy MLPs.

S(Vs, Vt) = R(F(Vs) ++ F(Vt)); F is shared by both inputs, ReLU follows
every layer except the last of each MLP, and the regressor emits a 6D
rotation followed by a translation in millimeters.
"""

from dataclasses import dataclass

import numpy as np

from src.config import PredictorConfig
from src.geometry.rotation6d import decode_batch
from src.models.errors import Errors, StabilizerError
from src.models.geometry import RigidTransform
from src.models.morphable import RegionName
from src.models.predictor import PoseLoss, PredictorWeights
from src.predictor.loss import raw_loss

OUTPUT_SIZE = 9
# 6D encoding of the identity rotation; initial regressor output bias
_IDENTITY_6D = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
# Shrinks the initial regressor output around the identity bias
_OUTPUT_INIT_GAIN = 1e-2


def layer_sizes(config: PredictorConfig, input_dim: int) -> tuple[list[int], list[int]]:
    extractor = [input_dim, *config.extractor_sizes, config.latent_size]
    regressor = [2 * config.latent_size, *config.regressor_sizes, OUTPUT_SIZE]
    return extractor, regressor


def init_weights(
    config: PredictorConfig, input_dim: int, mask: RegionName = "frontal", model_digest: str = ""
) -> PredictorWeights:
    """He-uniform weights from ``config.seed``, zero biases, zeroed Adam state."""
    rng = np.random.default_rng(config.seed)
    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    for sizes in layer_sizes(config, input_dim):
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / fan_in)
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
    weights[-1] *= _OUTPUT_INIT_GAIN
    biases[-1][:6] = _IDENTITY_6D
    params = [*weights, *biases]
    return PredictorWeights(
        config=config,
        input_dim=input_dim,
        mask=mask,
        weights=weights,
        biases=biases,
        adam_m=[np.zeros_like(p) for p in params],
        adam_v=[np.zeros_like(p) for p in params],
        model_digest=model_digest,
    )


@dataclass
class _MLPCache:
    inputs: list[np.ndarray]
    pre_activations: list[np.ndarray]


def _mlp_forward(
    weights: list[np.ndarray], biases: list[np.ndarray], x: np.ndarray
) -> tuple[np.ndarray, _MLPCache]:
    cache = _MLPCache(inputs=[], pre_activations=[])
    h = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        cache.inputs.append(h)
        z = h @ w.T + b
        cache.pre_activations.append(z)
        h = z if i == last else np.maximum(z, 0.0)
    return h, cache


def _mlp_backward(
    weights: list[np.ndarray], cache: _MLPCache, grad_out: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
    n = len(weights)
    grad_w: list[np.ndarray] = [np.empty(0)] * n
    grad_b: list[np.ndarray] = [np.empty(0)] * n
    grad = grad_out
    for i in reversed(range(n)):
        if i != n - 1:
            grad = grad * (cache.pre_activations[i] > 0.0)
        grad_w[i] = grad.T @ cache.inputs[i]
        grad_b[i] = grad.sum(axis=0)
        grad = grad @ weights[i]
    return grad_w, grad_b, grad


def flatten_blocks(blocks: np.ndarray) -> np.ndarray:
    """(B, 4 or 3, N) blocks -> (B, 3N) rows: all x, then all y, then all z."""
    blocks = np.asarray(blocks, dtype=np.float64)
    return blocks[:, :3].reshape(blocks.shape[0], -1)


def _check_input(omega: PredictorWeights, x: np.ndarray) -> None:
    if x.ndim != 2 or x.shape[1] != omega.input_dim:
        raise StabilizerError(
            Errors.SHAPE_MISMATCH,
            f"predictor expects {omega.n_points} points per mesh, "
            f"got {x.shape[-1] // 3 if x.ndim else 0}",
            expected=omega.n_points,
        )


def _split(omega: PredictorWeights):
    k = omega.n_extractor_layers
    return (omega.weights[:k], omega.biases[:k]), (omega.weights[k:], omega.biases[k:])


def feature_extract(omega: PredictorWeights, v: np.ndarray) -> np.ndarray:
    """Latent code F(v) of one (4, N_C) block."""
    x = flatten_blocks(np.asarray(v)[None]) * omega.config.input_scale
    _check_input(omega, x)
    (fw, fb), _ = _split(omega)
    latent, _ = _mlp_forward(fw, fb, x)
    return latent[0]


@dataclass
class ForwardCache:
    extractor: _MLPCache
    regressor: _MLPCache
    batch: int


def forward(
    omega: PredictorWeights, xs: np.ndarray, xt: np.ndarray
) -> tuple[np.ndarray, ForwardCache]:
    """Raw (B, 9) outputs for flattened, scaled source/target rows."""
    _check_input(omega, xs)
    _check_input(omega, xt)
    (fw, fb), (rw, rb) = _split(omega)
    batch = xs.shape[0]
    latent, f_cache = _mlp_forward(fw, fb, np.concatenate([xs, xt], axis=0))
    joint = np.concatenate([latent[:batch], latent[batch:]], axis=1)
    raw, r_cache = _mlp_forward(rw, rb, joint)
    return raw, ForwardCache(extractor=f_cache, regressor=r_cache, batch=batch)


def backward(
    omega: PredictorWeights, cache: ForwardCache, grad_raw: np.ndarray
) -> list[np.ndarray]:
    """Parameter gradients in ``omega.parameters()`` order."""
    (fw, _), (rw, _) = _split(omega)
    grad_rw, grad_rb, grad_joint = _mlp_backward(rw, cache.regressor, grad_raw)
    latent_size = omega.config.latent_size
    grad_latent = np.concatenate(
        [grad_joint[:, :latent_size], grad_joint[:, latent_size:]], axis=0
    )
    grad_fw, grad_fb, _ = _mlp_backward(fw, cache.extractor, grad_latent)
    return [*grad_fw, *grad_rw, *grad_fb, *grad_rb]


def loss_and_gradients(
    omega: PredictorWeights,
    xs: np.ndarray,
    xt: np.ndarray,
    gt_rotations: np.ndarray,
    gt_translations: np.ndarray,
) -> tuple[PoseLoss, list[np.ndarray]]:
    raw, cache = forward(omega, xs, xt)
    result, grad_raw = raw_loss(raw, gt_rotations, gt_translations, omega.config.alpha_t)
    return result, backward(omega, cache, grad_raw)


def predict_batch(
    omega: PredictorWeights, xs: np.ndarray, xt: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(B, 3, 3) rotations and (B, 3) translations for flattened, scaled rows."""
    raw, _ = forward(omega, xs, xt)
    try:
        rotations, _ = decode_batch(raw[:, :6])
    except StabilizerError as e:
        raise StabilizerError(
            Errors.DEGENERATE_GEOMETRY,
            f"predictor emitted a degenerate 6D rotation: {e}",
            raw=raw[:, :6].tolist(),
            iteration=omega.iteration,
        ) from e
    return rotations, raw[:, 6:9]


def predict(omega: PredictorWeights, vs_hat: np.ndarray, vt_hat: np.ndarray) -> RigidTransform:
    """S(Vs, Vt) for one preprocessed pair, source features first."""
    scale = omega.config.input_scale
    xs = flatten_blocks(np.asarray(vs_hat)[None]) * scale
    xt = flatten_blocks(np.asarray(vt_hat)[None]) * scale
    rotations, translations = predict_batch(omega, xs, xt)
    return RigidTransform.from_parts(rotations[0], translations[0])
