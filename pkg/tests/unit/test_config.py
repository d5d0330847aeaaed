# tests/unit/test_config.py
import json

import pytest
from pydantic import ValidationError

from src.config import (
    CmapConfig,
    CmapVariant,
    EvaluationConfig,
    PredictorConfig,
    Settings,
    SynthesisConfig,
    check_region,
    get_settings,
    load_run_config,
)
from src.models.errors import Errors, StabilizerError


def test_settings_defaults():
    settings = Settings()
    assert settings.base_dir.exists()
    assert settings.data_dir.name == "data"
    assert settings.default_model_path == settings.data_dir / "model.bin"
    assert settings.default_report_path.parent == settings.output_dir


def test_get_settings_singleton():
    s1 = get_settings()
    s2 = get_settings()
    assert s1 is s2  # Same instance


def test_settings_read_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("FACESTAB_DATA_DIR", str(tmp_path))
    monkeypatch.setenv("FACESTAB_WORKERS", "3")
    settings = Settings()
    assert settings.data_dir == tmp_path
    assert settings.workers == 3
    assert settings.default_dataset_path == tmp_path / "train.bin"


def test_synthesis_defaults():
    cfg = SynthesisConfig()
    assert cfg.eps_expr == 0.02
    assert cfg.eps_r == pytest.approx(0.0524)
    assert cfg.eps_t == 3.0
    assert cfg.mask == "frontal"
    assert cfg.count == 4000


def test_synthesis_rejects_inverted_expression_range():
    with pytest.raises(ValidationError):
        SynthesisConfig(expression_min=0.8, expression_max=0.2)


def test_predictor_defaults():
    cfg = PredictorConfig()
    assert cfg.extractor_sizes == [1024, 512, 512]
    assert cfg.latent_size == 256
    assert cfg.regressor_sizes == [512, 512, 512]
    assert cfg.learning_rate == 5e-5
    assert cfg.iterations == 20_000
    assert cfg.batch_size == 32


def test_predictor_rejects_empty_layers():
    with pytest.raises(ValidationError):
        PredictorConfig(extractor_sizes=[16, 0])


def test_cmap_defaults():
    cfg = CmapConfig()
    assert cfg.variant == CmapVariant.CONTRAST_CONSISTENT
    assert (cfg.alpha_data, cfg.alpha_reg, cfg.alpha_sigma, cfg.alpha_nbhd) == (100.0, 0.01, 100.0, 100.0)
    assert cfg.rho == 0.4
    assert cfg.k == 10
    with pytest.raises(ValidationError):
        CmapConfig(step_grid=[])


def test_evaluation_range_must_be_increasing():
    with pytest.raises(ValidationError):
        EvaluationConfig(pck_min_mm=5.0, pck_max_mm=1.0)


def test_load_run_config_without_file_uses_settings():
    settings = Settings()
    cfg = load_run_config(None, settings)
    assert cfg.model_path == settings.default_model_path
    assert cfg.validation.seed == 1
    assert cfg.test.seed == 2


def test_load_run_config_merges_sections(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"predictor": {"iterations": 10}, "model_path": "m.bin"}))
    cfg = load_run_config(path, Settings())
    assert cfg.predictor.iterations == 10
    assert cfg.predictor.batch_size == 32
    assert cfg.model_path.name == "m.bin"


def test_load_run_config_errors(tmp_path):
    with pytest.raises(StabilizerError) as exc:
        load_run_config(tmp_path / "missing.json", Settings())
    assert exc.value.code == Errors.FILE_NOT_FOUND

    broken = tmp_path / "broken.json"
    broken.write_text("{oops")
    with pytest.raises(StabilizerError) as exc:
        load_run_config(broken, Settings())
    assert exc.value.code == Errors.INVALID_DATA_FORMAT

    invalid = tmp_path / "invalid.json"
    invalid.write_text(json.dumps({"synthesis": {"count": 0}}))
    with pytest.raises(ValidationError):
        load_run_config(invalid, Settings())


def test_check_region():
    assert check_region("upper") == "upper"
    with pytest.raises(StabilizerError) as exc:
        check_region("nose")
    assert exc.value.code == Errors.UNKNOWN_REGION
