# tests/integration/test_full_flow.py
import json
from contextlib import chdir
from pathlib import Path

import numpy as np
import pytest
from typer.testing import CliRunner

from src.cli import app
from src.config import EvaluationConfig
from src.factories.repository_factory import RepositoryFactory
from src.factories.stabilizer_factory import StabilizerFactory
from src.geometry.rigid import apply
from src.models.geometry import RigidTransform
from src.morphable.model import model_forward
from src.repositories.mesh_repository import export_obj, read_model_mesh, write_obj
from src.services.evaluation import EvaluationService
from src.synthesis.generator import regenerate_pairs

runner = CliRunner()

_PAIRS = {"identity_set_size": 100, "library_size": 40}

RUN_CONFIG = {
    "model_path": "model.bin",
    "dataset_path": "train.bin",
    "validation_path": "validation.bin",
    "test_path": "test.bin",
    "checkpoint_path": "checkpoint.bin",
    "cmap_path": "cmap.bin",
    "report_path": "report.json",
    "model": {"seed": 0, "vertices": 642, "n_identity": 6, "n_expression": 12},
    "synthesis": {"count": 16, **_PAIRS},
    "validation": {"count": 6, **_PAIRS},
    "test": {"count": 6, **_PAIRS},
    "predictor": {
        "extractor_sizes": [16, 12],
        "latent_size": 6,
        "regressor_sizes": [10],
        "iterations": 10,
        "batch_size": 4,
        "learning_rate": 1e-4,
        "log_every": 5,
        "validate_every": 5,
    },
    "cmap": {"steps": 5, "batch_size": 4, "k": 4},
    "evaluation": {"regions": ["face", "upper"]},
}


def _invoke(*args: str):
    result = runner.invoke(app, ["-c", "config.json", *args])
    assert result.exit_code == 0, result.output
    return result


def _run_pipeline(directory: Path) -> None:
    """model-synth -> data-gen -> train -> baseline -> eval, with relative paths."""
    (directory / "config.json").write_text(json.dumps(RUN_CONFIG), encoding="utf-8")
    with chdir(directory):
        _invoke("model-synth")
        for split in ("train", "validation", "test"):
            _invoke("data-gen", "--split", split)
        _invoke("train")
        _invoke("baseline", "-n", "4", "--steps", "5")
        _invoke(
            "eval",
            "-m", "proc_face",
            "-m", "oracle",
            "-m", "ours",
            "-m", "cmap",
            "--csv", "report.csv",
            "--markdown", "report.md",
        )


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    directory = tmp_path_factory.mktemp("flow")
    _run_pipeline(directory)
    return directory


def test_pipeline_writes_every_artifact(workspace):
    for name in (
        "model.bin",
        "train.bin",
        "validation.bin",
        "test.bin",
        "checkpoint.bin",
        "checkpoint.log.jsonl",
        "cmap.bin",
        "report.json",
        "report.csv",
        "report.md",
    ):
        assert (workspace / name).exists(), name


def test_training_log_has_one_record_per_logged_iteration(workspace):
    lines = (workspace / "checkpoint.log.jsonl").read_text(encoding="utf-8").splitlines()
    records = [json.loads(line) for line in lines]
    assert [r["iteration"] for r in records] == [5, 10]
    assert records[-1]["validation_md"] is not None


def test_checkpoint_records_its_inputs(workspace):
    factory = RepositoryFactory()
    weights = factory.create_checkpoint_repository(workspace / "checkpoint.bin").load()
    train_repo = factory.create_dataset_repository(workspace / "train.bin")
    model_repo = factory.create_model_repository(workspace / "model.bin")
    assert weights.dataset_digest == train_repo.digest()
    assert weights.model_digest == model_repo.digest()


def test_report_scores_every_method(workspace):
    report = RepositoryFactory().create_report_repository(workspace / "report.json").load()
    assert report.samples == 6
    assert report.methods() == ["proc_face", "oracle", "ours", "cmap"]
    assert report.regions() == ["face", "upper"]
    assert report.row("oracle", "face").auc == pytest.approx(100.0)
    assert report.row("oracle", "face").md_mean == pytest.approx(0.0, abs=1e-9)
    assert set(report.inputs) == {"model", "test", "checkpoint", "cmap"}
    oracle_skull = next(s for s in report.skull if s.method == "oracle")
    assert oracle_skull.median <= 1e-6


def test_csv_and_markdown_agree_with_the_report(workspace):
    csv_lines = (workspace / "report.csv").read_text(encoding="utf-8").splitlines()
    assert len(csv_lines) == 1 + 4 * 2
    markdown = (workspace / "report.md").read_text(encoding="utf-8")
    assert "| oracle |" in markdown
    assert "6 test pairs." in markdown


def test_cli_report_matches_service_evaluation(workspace):
    factory = RepositoryFactory()
    psi = factory.create_model_repository(workspace / "model.bin").load()
    data = factory.create_dataset_repository(workspace / "test.bin").load()
    report = factory.create_report_repository(workspace / "report.json").load()

    pairs = regenerate_pairs(data, psi)
    evaluation = EvaluationConfig.model_validate(RUN_CONFIG["evaluation"])
    service = EvaluationService(pairs, psi, evaluation)
    rows, _ = service.evaluate_method("proc_face", StabilizerFactory(psi).create("proc_face"))
    face = next(r for r in rows if r.region == "face")
    assert face.md_mean == pytest.approx(report.row("proc_face", "face").md_mean)


def test_pipeline_is_byte_deterministic(workspace, tmp_path):
    _run_pipeline(tmp_path)
    for name in ("model.bin", "train.bin", "checkpoint.bin", "cmap.bin", "report.json", "report.md"):
        assert (tmp_path / name).read_bytes() == (workspace / name).read_bytes(), name


def test_stabilize_writes_mesh_and_transform(workspace, tmp_path):
    psi = RepositoryFactory().create_model_repository(workspace / "model.bin").load()
    source = model_forward(psi, psi.zero_params())
    target = apply(RigidTransform.from_translation([2.0, -1.0, 0.5]), source)
    export_obj(psi, source, tmp_path / "source.obj")
    export_obj(psi, target, tmp_path / "target.obj")

    with chdir(workspace):
        _invoke(
            "stabilize",
            "-s", str(tmp_path / "source.obj"),
            "-t", str(tmp_path / "target.obj"),
            "-o", str(tmp_path / "stabilized.obj"),
            "--transform", str(tmp_path / "transform.json"),
        )

    stabilized = read_model_mesh(tmp_path / "stabilized.obj", psi)
    payload = json.loads((tmp_path / "transform.json").read_text(encoding="utf-8"))
    matrix = np.array(payload["matrix"])
    np.testing.assert_allclose(matrix[3], [0.0, 0.0, 0.0, 1.0])
    assert np.linalg.det(matrix[:3, :3]) == pytest.approx(1.0)
    np.testing.assert_allclose(stabilized, matrix @ source, atol=1e-5)
    assert payload["model_digest"] == RepositoryFactory().create_model_repository(
        workspace / "model.bin"
    ).digest()


def test_stabilize_manifest_defaults_to_transform_files(workspace, tmp_path):
    psi = RepositoryFactory().create_model_repository(workspace / "model.bin").load()
    source = model_forward(psi, psi.zero_params())
    export_obj(psi, source, tmp_path / "a.obj")
    export_obj(psi, source, tmp_path / "b.obj")
    manifest = tmp_path / "pairs.json"
    manifest.write_text(
        json.dumps([{"source": "a.obj", "target": "b.obj"}, {"source": "b.obj", "target": "a.obj"}]),
        encoding="utf-8",
    )

    with chdir(workspace):
        result = _invoke("stabilize", "--manifest", str(manifest))

    assert "Stabilized 2 pair(s)" in result.output
    assert (tmp_path / "a.transform.json").exists()
    assert (tmp_path / "b.transform.json").exists()


def test_stabilize_rejects_a_target_with_other_topology(workspace, tmp_path):
    psi = RepositoryFactory().create_model_repository(workspace / "model.bin").load()
    source = model_forward(psi, psi.zero_params())
    export_obj(psi, source, tmp_path / "source.obj")
    write_obj(tmp_path / "target.obj", source[:, :-1])

    with chdir(workspace):
        result = runner.invoke(
            app,
            ["-c", "config.json", "stabilize", "-s", str(tmp_path / "source.obj"),
             "-t", str(tmp_path / "target.obj")],
        )
    assert result.exit_code == 1
    assert "SHAPE_MISMATCH" in result.output


def test_missing_model_is_reported(workspace, tmp_path):
    with chdir(workspace):
        result = runner.invoke(
            app, ["-c", "config.json", "data-gen", "--model", str(tmp_path / "missing.bin")]
        )
    assert result.exit_code == 1
    assert "FILE_NOT_FOUND" in result.output


def test_unknown_method_is_reported(workspace):
    with chdir(workspace):
        result = runner.invoke(app, ["-c", "config.json", "eval", "-m", "icp"])
    assert result.exit_code == 1
    assert "INVALID_CONFIG" in result.output


def test_unknown_split_is_reported(workspace):
    with chdir(workspace):
        result = runner.invoke(app, ["-c", "config.json", "data-gen", "--split", "dev"])
    assert result.exit_code == 1
    assert "--split" in result.output


def test_invalid_config_values_are_reported(tmp_path):
    bad = {**RUN_CONFIG, "predictor": {"learning_rate": -1.0}}
    (tmp_path / "config.json").write_text(json.dumps(bad), encoding="utf-8")
    with chdir(tmp_path):
        result = runner.invoke(app, ["-c", "config.json", "model-synth"])
    assert result.exit_code == 1
    assert "INVALID_CONFIG" in result.output
    assert not (tmp_path / "model.bin").exists()


def test_ablation_dataset_size_runs(workspace, tmp_path):
    output = tmp_path / "ablation.json"
    with chdir(workspace):
        _invoke(
            "ablate", "dataset-size",
            "--size", "4", "--size", "8",
            "--val-count", "3",
            "--iterations", "3",
            "-o", str(output),
        )
    report = RepositoryFactory().create_ablation_repository(output).load()
    assert report.kind == "dataset_size"
    assert [row.setting for row in report.rows] == ["4", "8"]
