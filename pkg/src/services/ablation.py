# src/services/ablation.py
import logging

from src.config import EvaluationConfig, PredictorConfig, SynthesisConfig
from src.models.errors import Errors, StabilizerError
from src.models.evaluation import AblationReport, AblationRow
from src.models.morphable import ModelData
from src.models.predictor import PredictorWeights
from src.models.synthesis import Dataset, SyntheticPair
from src.predictor.stabilizer import stabilize_pair
from src.predictor.trainer import train
from src.services.evaluation import EvaluationService
from src.synthesis.generator import generate_dataset
from src.synthesis.priors import build_priors

logger = logging.getLogger(__name__)


class AblationService:
    """Retrains the predictor under varied settings and scores each on fixed validation pairs"""

    def __init__(
        self,
        psi: ModelData,
        predictor: PredictorConfig,
        validation_pairs: list[SyntheticPair],
        region: str = "face",
        evaluation: EvaluationConfig | None = None,
        model_digest: str = "",
    ):
        if not validation_pairs:
            raise StabilizerError(Errors.EMPTY_INPUT, "ablation needs validation pairs")
        self.psi = psi
        self.predictor = predictor
        self.region = region
        self.model_digest = model_digest
        cfg = evaluation or EvaluationConfig()
        self.evaluator = EvaluationService(
            validation_pairs, psi, cfg.model_copy(update={"regions": [region]})
        )

    def _score(self, setting: str, omega: PredictorWeights, train_samples: int) -> AblationRow:
        def ours(pair: SyntheticPair):
            return stabilize_pair(omega, pair.source_full, pair.target_full, self.psi)[0]

        rows, _ = self.evaluator.evaluate_method(setting, ours)
        row = rows[0]
        logger.info("%s: m_d %.4f mm, AUC %.2f", setting, row.md_mean, row.auc)
        return AblationRow(
            setting=setting,
            train_samples=train_samples,
            md_mean=row.md_mean,
            md_std=row.md_std,
            mx=row.mx,
            auc=row.auc,
        )

    def dataset_size(self, dataset: Dataset, sizes: list[int]) -> AblationReport:
        """Train on the first n samples of one dataset for every n in sizes."""
        if not sizes:
            raise StabilizerError(Errors.EMPTY_INPUT, "no dataset sizes given")
        too_large = [n for n in sizes if n > len(dataset) or n < 1]
        if too_large:
            raise StabilizerError(
                Errors.INVALID_CONFIG,
                f"sizes {too_large} outside 1..{len(dataset)} (dataset size)",
            )
        rows = []
        for n in sorted(sizes):
            omega, _ = train(self.predictor, dataset.head(n))
            rows.append(self._score(str(n), omega, n))
        return AblationReport(
            kind="dataset_size",
            region=self.region,
            rows=rows,
            config={"predictor": self.predictor.model_dump(mode="json"), "sizes": sorted(sizes)},
        )

    def head_coverage(self, synthesis: SynthesisConfig, masks: list[str]) -> AblationReport:
        """Generate one training set per input mask and train on each."""
        if not masks:
            raise StabilizerError(Errors.EMPTY_INPUT, "no input masks given")
        dist, library = build_priors(synthesis, self.psi)
        rows = []
        for mask in masks:
            cfg = synthesis.model_copy(update={"mask": mask})
            dataset = generate_dataset(cfg, self.psi, dist, library, self.model_digest)
            omega, _ = train(self.predictor, dataset)
            rows.append(self._score(mask, omega, len(dataset)))
        return AblationReport(
            kind="head_coverage",
            region=self.region,
            rows=rows,
            config={
                "predictor": self.predictor.model_dump(mode="json"),
                "synthesis": synthesis.model_dump(mode="json", exclude={"workers"}),
                "masks": list(masks),
            },
        )


def dataset_size_ablation(
    dataset: Dataset,
    validation_pairs: list[SyntheticPair],
    psi: ModelData,
    predictor: PredictorConfig,
    sizes: list[int],
    region: str = "face",
) -> AblationReport:
    return AblationService(psi, predictor, validation_pairs, region).dataset_size(dataset, sizes)


def head_coverage_ablation(
    synthesis: SynthesisConfig,
    validation_pairs: list[SyntheticPair],
    psi: ModelData,
    predictor: PredictorConfig,
    masks: list[str],
    region: str = "face",
) -> AblationReport:
    return AblationService(psi, predictor, validation_pairs, region).head_coverage(synthesis, masks)
