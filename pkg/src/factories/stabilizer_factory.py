# src/factories/stabilizer_factory.py
import numpy as np

from src.baselines.cmap import cmap_stabilize
from src.baselines.procrustes import proc_baseline
from src.baselines.unpose import perturb_pose, unpose_baseline
from src.models.baselines import ConfidenceMap
from src.models.errors import Errors, StabilizerError
from src.models.geometry import RigidTransform
from src.models.morphable import ModelData
from src.models.predictor import PredictorWeights
from src.models.synthesis import SyntheticPair
from src.predictor.stabilizer import stabilize_pair
from src.services.evaluation import Stabilizer

METHOD_NAMES: tuple[str, ...] = (
    "proc_head",
    "proc_face",
    "proc_upper",
    "unpose",
    "cmap",
    "ours",
    "oracle",
)


class StabilizerFactory:
    """Builds the pair -> transform callables compared by the evaluation"""

    def __init__(
        self,
        psi: ModelData,
        weights: PredictorWeights | None = None,
        cmap: ConfidenceMap | None = None,
        param_noise: float = 0.0,
        noise_seed: int = 0,
    ):
        self.psi = psi
        self.weights = weights
        self.cmap = cmap
        self.param_noise = param_noise
        self.noise_seed = noise_seed

    def _proc(self, region: str) -> Stabilizer:
        def method(pair: SyntheticPair) -> RigidTransform:
            return proc_baseline(pair.source_full, pair.target_full, self.psi, region)

        return method

    def _unpose(self, pair: SyntheticPair) -> RigidTransform:
        source, target = pair.params_source, pair.params_target
        if self.param_noise > 0:
            rng = np.random.default_rng([self.noise_seed, pair.sample.seed])
            source = perturb_pose(source, self.param_noise, rng)
            target = perturb_pose(target, self.param_noise, rng)
        return unpose_baseline(source, target, self.psi)

    def _cmap(self, pair: SyntheticPair) -> RigidTransform:
        return cmap_stabilize(self.cmap, pair.source_full, pair.target_full, self.psi)

    def _ours(self, pair: SyntheticPair) -> RigidTransform:
        return stabilize_pair(self.weights, pair.source_full, pair.target_full, self.psi)[0]

    @staticmethod
    def _oracle(pair: SyntheticPair) -> RigidTransform:
        return pair.gt

    def create(self, name: str) -> Stabilizer:
        """Create one method by name"""
        if name not in METHOD_NAMES:
            raise StabilizerError(
                Errors.INVALID_CONFIG,
                f"Unknown method '{name}', expected one of {', '.join(METHOD_NAMES)}",
                method=name,
            )
        if name.startswith("proc_"):
            return self._proc(name.removeprefix("proc_"))
        if name == "cmap":
            if self.cmap is None:
                raise StabilizerError(Errors.INVALID_CONFIG, "method 'cmap' needs a confidence map")
            return self._cmap
        if name == "ours":
            if self.weights is None:
                raise StabilizerError(Errors.INVALID_CONFIG, "method 'ours' needs a checkpoint")
            return self._ours
        if name == "unpose":
            return self._unpose
        return self._oracle

    def create_methods(self, names: list[str]) -> dict[str, Stabilizer]:
        return {name: self.create(name) for name in dict.fromkeys(names)}
