import json
from enum import Enum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.models.errors import Errors, StabilizerError
from src.models.morphable import REGION_NAMES, RegionName


class MorphableConfig(BaseModel):
    """Procedural morphable-model construction"""

    seed: int = Field(default=0, ge=0)
    vertices: int = Field(default=2562, ge=500)
    n_identity: int = Field(default=16, ge=1)
    n_expression: int = Field(default=24, ge=1)


class SynthesisConfig(BaseModel):
    """Training-pair synthesis (noise scales, priors, counts)"""

    eps_expr: float = Field(default=0.02, ge=0)
    eps_r: float = Field(default=0.0524, ge=0)  # radians, 3 degrees
    eps_t: float = Field(default=3.0, ge=0)  # mm
    mask: RegionName = "frontal"
    count: int = Field(default=4000, ge=1)
    seed: int = Field(default=0, ge=0)

    # Priors standing in for registered-scan parameter sets
    identity_set_size: int = Field(default=1000, ge=2)
    library_size: int = Field(default=500, ge=1)
    library_sparsity: int = Field(default=3, ge=0)
    expression_min: float = Field(default=0.2, ge=0)
    expression_max: float = Field(default=1.0, ge=0)

    # Jaw opening per mesh, |N(0, std)| radians; 0 keeps pairs expression-only
    jaw_rotation_std: float = Field(default=0.0, ge=0)

    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def check_expression_range(self) -> "SynthesisConfig":
        if self.expression_max < self.expression_min:
            raise ValueError(
                f"expression_max ({self.expression_max}) must be >= "
                f"expression_min ({self.expression_min})"
            )
        return self


class PredictorConfig(BaseModel):
    """Feature extractor / regressor architecture and optimizer schedule"""

    extractor_sizes: list[int] = [1024, 512, 512]
    latent_size: int = Field(default=256, ge=1)
    regressor_sizes: list[int] = [512, 512, 512]
    learning_rate: float = Field(default=5e-5, gt=0)
    iterations: int = Field(default=20_000, ge=0)
    batch_size: int = Field(default=32, ge=1)
    alpha_t: float = Field(default=1.0, ge=0)
    seed: int = Field(default=0, ge=0)

    adam_beta1: float = Field(default=0.9, ge=0, lt=1)
    adam_beta2: float = Field(default=0.999, ge=0, lt=1)
    adam_eps: float = Field(default=1e-8, gt=0)

    # Multiplies pre-aligned millimeter coordinates before the first layer
    input_scale: float = Field(default=1.0, gt=0)

    log_every: int = Field(default=100, ge=1)
    validate_every: int = Field(default=1000, ge=1)

    @model_validator(mode="after")
    def check_layer_sizes(self) -> "PredictorConfig":
        for name in ("extractor_sizes", "regressor_sizes"):
            sizes = getattr(self, name)
            if any(s <= 0 for s in sizes):
                raise ValueError(f"{name} must be positive, got {sizes}")
        return self


class CmapVariant(str, Enum):
    """Confidence-map energy variants"""

    ORIGINAL = "original"
    CONTRAST = "contrast"
    CONTRAST_CONSISTENT = "contrast_consistent"


class CmapConfig(BaseModel):
    """Learned confidence map optimisation"""

    variant: CmapVariant = CmapVariant.CONTRAST_CONSISTENT
    region: RegionName = "face"
    alpha_data: float = Field(default=100.0, ge=0)
    alpha_reg: float = Field(default=0.01, ge=0)
    alpha_sigma: float = Field(default=100.0, ge=0)
    alpha_nbhd: float = Field(default=100.0, ge=0)
    rho: float = Field(default=0.4, gt=0, lt=1)
    k: int = Field(default=10, ge=1)
    steps: int = Field(default=300, ge=1)
    step_size: float = Field(default=1e-2, gt=0)
    batch_size: int = Field(default=8, ge=1)
    seed: int = Field(default=0, ge=0)
    step_grid: list[float] = [1e-3, 1e-2, 1e-1]

    @model_validator(mode="after")
    def check_grid(self) -> "CmapConfig":
        if not self.step_grid or any(s <= 0 for s in self.step_grid):
            raise ValueError(f"step_grid must hold positive step sizes, got {self.step_grid}")
        return self


class EvaluationConfig(BaseModel):
    """Metric settings"""

    regions: list[RegionName] = ["head", "face", "upper"]
    pck_min_mm: float = Field(default=0.0, ge=0)
    pck_max_mm: float = Field(default=5.0, gt=0)
    pck_resolution: int = Field(default=100, ge=2)

    @model_validator(mode="after")
    def check_pck_range(self) -> "EvaluationConfig":
        if self.pck_max_mm <= self.pck_min_mm:
            raise ValueError(
                f"pck_max_mm ({self.pck_max_mm}) must be greater than pck_min_mm "
                f"({self.pck_min_mm})"
            )
        return self


class RunConfig(BaseModel):
    """One experiment: artifact paths plus every sub-configuration"""

    model_config = ConfigDict(protected_namespaces=())

    model_path: Path
    dataset_path: Path
    validation_path: Path
    test_path: Path
    checkpoint_path: Path
    cmap_path: Path
    report_path: Path

    model: MorphableConfig = MorphableConfig()
    synthesis: SynthesisConfig = SynthesisConfig(jaw_rotation_std=0.1)
    validation: SynthesisConfig = SynthesisConfig(count=500, seed=1, jaw_rotation_std=0.1)
    test: SynthesisConfig = SynthesisConfig(count=500, seed=2, jaw_rotation_std=0.1)
    predictor: PredictorConfig = PredictorConfig()
    cmap: CmapConfig = CmapConfig()
    evaluation: EvaluationConfig = EvaluationConfig()


class Settings(BaseSettings):
    """Global configuration"""

    model_config = SettingsConfigDict(
        env_prefix="FACESTAB_", env_file=".env", env_file_encoding="utf-8"
    )

    # Project paths
    base_dir: Path = Path(__file__).parent.parent
    data_dir: Path = Path(__file__).parent.parent / "data"
    output_dir: Path = Path(__file__).parent.parent / "output"

    log_level: str = "INFO"
    workers: int = Field(default=1, ge=1)

    # ── Computed paths ────────────────────────────────────────────────────────

    @property
    def default_model_path(self) -> Path:
        return self.data_dir / "model.bin"

    @property
    def default_dataset_path(self) -> Path:
        return self.data_dir / "train.bin"

    @property
    def default_validation_path(self) -> Path:
        return self.data_dir / "validation.bin"

    @property
    def default_test_path(self) -> Path:
        return self.data_dir / "test.bin"

    @property
    def default_checkpoint_path(self) -> Path:
        return self.output_dir / "checkpoint.bin"

    @property
    def default_cmap_path(self) -> Path:
        return self.output_dir / "cmap.bin"

    @property
    def default_report_path(self) -> Path:
        return self.output_dir / "report.json"

    def default_run_config(self) -> RunConfig:
        """RunConfig with every path under data_dir / output_dir."""
        return RunConfig(
            model_path=self.default_model_path,
            dataset_path=self.default_dataset_path,
            validation_path=self.default_validation_path,
            test_path=self.default_test_path,
            checkpoint_path=self.default_checkpoint_path,
            cmap_path=self.default_cmap_path,
            report_path=self.default_report_path,
        )


def load_run_config(path: Path | None, settings: "Settings") -> RunConfig:
    """Load a JSON run config; missing keys fall back to Settings defaults."""
    base = settings.default_run_config()
    if path is None:
        return base
    if not path.exists():
        raise StabilizerError(
            Errors.FILE_NOT_FOUND, f"Config file not found: {path}", filepath=str(path)
        )
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise StabilizerError(
            Errors.INVALID_DATA_FORMAT,
            f"Invalid JSON in {path}: {e.msg} at line {e.lineno}:{e.colno}",
        ) from e
    merged = base.model_dump(mode="json")
    for key, value in raw.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return RunConfig.model_validate(merged)


def check_region(name: str) -> RegionName:
    """Validate a region name coming from the command line."""
    if name not in REGION_NAMES:
        raise StabilizerError(
            Errors.UNKNOWN_REGION,
            f"Unknown region '{name}', expected one of {', '.join(REGION_NAMES)}",
            region=name,
        )
    return name  # type: ignore[return-value]


# Global singleton
_settings: Settings | None = None


def get_settings() -> Settings:
    """Get global settings singleton"""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


def reset_settings() -> None:
    """Reset global settings singleton.

    This function is primarily intended for testing purposes, allowing
    tests to reset the global state between test runs.
    """
    global _settings
    _settings = None
