"""Face-mesh stabilization toolkit CLI"""

import json
import logging
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import typer
from pydantic import BaseModel, ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from src.baselines.cmap import cmap_train, select_step_size
from src.config import CmapVariant, RunConfig, check_region, get_settings, load_run_config
from src.factories.repository_factory import RepositoryFactory
from src.factories.stabilizer_factory import METHOD_NAMES, StabilizerFactory
from src.main.generator import MarkdownReportGenerator
from src.models.errors import Errors, StabilizerError
from src.models.evaluation import AblationReport, EvalReport
from src.models.morphable import ModelData
from src.models.predictor import PredictorWeights
from src.morphable.builder import synth_model
from src.predictor.stabilizer import stabilize_batch
from src.predictor.trainer import DatasetBatches, OnlineBatches, PredictorTrainer
from src.repositories.container import atomic_write_text, file_digest
from src.repositories.mesh_repository import export_obj, read_model_mesh
from src.services.ablation import AblationService
from src.services.evaluation import EvaluationService
from src.synthesis.generator import generate_dataset, regenerate_pairs
from src.synthesis.priors import build_priors

app = typer.Typer(name="facestab", help="Learned face-mesh stabilization toolkit")
ablate_app = typer.Typer(help="Retrain under varied settings and compare validation error")
app.add_typer(ablate_app, name="ablate")

console = Console()

_SPLITS = ("train", "validation", "test")
_DEFAULT_METHODS = ["proc_head", "proc_face", "proc_upper", "unpose", "ours"]
_DEFAULT_COVERAGE = ["frontal", "face", "face_and_neck", "head", "superhero"]

repositories = RepositoryFactory()


# ── Helpers ───────────────────────────────────────────────────────────────────


@contextmanager
def _handle_errors() -> Iterator[None]:
    """Turn domain and validation errors into a red one-liner and exit code 1."""
    try:
        yield
    except StabilizerError as e:
        console.print(f"[red]✗ {e.code}: {e}[/red]")
        raise typer.Exit(1)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or e.title
        console.print(f"[red]✗ {Errors.INVALID_CONFIG}: {where}: {first['msg']}[/red]")
        raise typer.Exit(1)


def _setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def _override(config: BaseModel, **values) -> BaseModel:
    """Validated copy with the flags that were actually given."""
    given = {k: v for k, v in values.items() if v is not None}
    if not given:
        return config
    return type(config).model_validate({**config.model_dump(), **given})


def _run(ctx: typer.Context) -> RunConfig:
    return ctx.obj


def _load_model(path: Path) -> tuple[ModelData, str]:
    repo = repositories.create_model_repository(path)
    with console.status(f"[cyan]Loading model {path}..."):
        psi = repo.load()
    return psi, repo.digest()


def _load_checkpoint(path: Path, model_digest: str) -> tuple[PredictorWeights, str]:
    repo = repositories.create_checkpoint_repository(path)
    weights = repo.load()
    repo.check_model(weights, model_digest)
    return weights, repo.digest()


def _resolve(base: Path, value: str | None) -> Path | None:
    if value is None:
        return None
    path = Path(value)
    return path if path.is_absolute() else base / path


def _write_transform(path: Path, matrix: list[list[float]], provenance: dict) -> None:
    atomic_write_text(path, json.dumps({"matrix": matrix, **provenance}, indent=2) + "\n")


def _print_report(report: EvalReport) -> None:
    table = Table(show_header=True, header_style="bold")
    table.add_column("Method")
    for region in report.regions():
        table.add_column(f"{region} m_d", justify="right")
        table.add_column(f"{region} m_x", justify="right")
        table.add_column(f"{region} AUC", justify="right", style="cyan")
    for method in report.methods():
        cells = []
        for region in report.regions():
            row = report.row(method, region)
            cells += [f"{row.md_mean:.2f} ± {row.md_std:.2f}", f"{row.mx:.2f}", f"{row.auc:.2f}"]
        table.add_row(method, *cells)
    console.print(table)

    skull = Table(show_header=True, header_style="bold", title="Skull RMS (mm)")
    skull.add_column("Method")
    skull.add_column("Mean", justify="right")
    skull.add_column("Median", justify="right", style="cyan")
    for s in report.skull:
        skull.add_row(s.method, f"{s.mean:.4f}", f"{s.median:.4f}")
    console.print(skull)


def _print_ablation(report: AblationReport) -> None:
    table = Table(show_header=True, header_style="bold", title=f"{report.kind} ({report.region})")
    table.add_column("Setting")
    table.add_column("Train samples", justify="right")
    table.add_column("m_d", justify="right", style="cyan")
    table.add_column("m_x", justify="right")
    table.add_column("AUC", justify="right")
    for row in report.rows:
        table.add_row(
            row.setting,
            str(row.train_samples),
            f"{row.md_mean:.3f} ± {row.md_std:.3f}",
            f"{row.mx:.3f}",
            f"{row.auc:.2f}",
        )
    console.print(table)


# ── Global options ────────────────────────────────────────────────────────────


@app.callback()
def main(
    ctx: typer.Context,
    config: Path = typer.Option(
        None, "-c", "--config", help="JSON run config (missing keys use defaults)"
    ),
    log_level: str = typer.Option(None, "--log-level", help="DEBUG, INFO, WARNING, ERROR"),
) -> None:
    """Synthesize data, train the stabilizer, run baselines and evaluate."""
    settings = get_settings()
    _setup_logging(log_level or settings.log_level)
    with _handle_errors():
        ctx.obj = load_run_config(config, settings)


# ── Model and data ────────────────────────────────────────────────────────────


@app.command("model-synth")
def model_synth(
    ctx: typer.Context,
    output: Path = typer.Option(None, "-o", "--output", help="Model file to write"),
    seed: int = typer.Option(None, "--seed", help="Model seed"),
    vertices: int = typer.Option(None, "--vertices", help="Target vertex count (>= 500)"),
    n_identity: int = typer.Option(None, "--n-identity", help="Identity basis size"),
    n_expression: int = typer.Option(None, "--n-expression", help="Expression basis size"),
) -> None:
    """Build the procedural head model."""
    run = _run(ctx)
    output = output or run.model_path
    with _handle_errors():
        cfg = _override(
            run.model,
            seed=seed,
            vertices=vertices,
            n_identity=n_identity,
            n_expression=n_expression,
        )
        with console.status("[cyan]Synthesizing model..."):
            psi = synth_model(cfg.seed, cfg.vertices, cfg.n_identity, cfg.n_expression)
        repo = repositories.create_model_repository(output)
        repo.save(psi)
        digest = repo.digest()

    console.print(f"[green]✓ Model written:[/green] {output}")
    console.print(
        f"  vertices: {psi.n_vertices:,}  joints: {psi.n_joints}  "
        f"identity: {psi.n_identity}  expression: {psi.n_expression}  skull: {psi.skull.shape[1]}"
    )
    table = Table(show_header=True, header_style="bold")
    table.add_column("Region")
    table.add_column("Vertices", justify="right", style="cyan")
    for name, indices in psi.masks.items():
        table.add_row(name, f"{indices.size:,}")
    console.print(table)
    console.print(f"[dim]sha256 {digest}[/dim]")


@app.command("data-gen")
def data_gen(
    ctx: typer.Context,
    split: str = typer.Option("train", "--split", help="train, validation or test"),
    model: Path = typer.Option(None, "--model", help="Model file"),
    output: Path = typer.Option(None, "-o", "--output", help="Dataset file to write"),
    count: int = typer.Option(None, "-n", "--count", help="Number of samples"),
    seed: int = typer.Option(None, "--seed", help="Master sample seed"),
    mask: str = typer.Option(None, "--mask", help="Input region of the training pairs"),
    jaw_std: float = typer.Option(None, "--jaw-std", help="Jaw opening std (radians)"),
    workers: int = typer.Option(None, "-w", "--workers", help="Worker processes"),
) -> None:
    """Generate a synthetic pair dataset."""
    run = _run(ctx)
    if split not in _SPLITS:
        console.print(f"[red]✗ --split must be one of {', '.join(_SPLITS)}, got '{split}'[/red]")
        raise typer.Exit(1)
    section = {"train": "synthesis", "validation": "validation", "test": "test"}[split]
    default_output = {
        "train": run.dataset_path,
        "validation": run.validation_path,
        "test": run.test_path,
    }[split]
    output = output or default_output

    with _handle_errors():
        if mask is not None:
            check_region(mask)
        cfg = _override(
            getattr(run, section),
            count=count,
            seed=seed,
            mask=mask,
            jaw_rotation_std=jaw_std,
            workers=workers or get_settings().workers,
        )
        psi, digest = _load_model(model or run.model_path)
        dist, library = build_priors(cfg, psi)
        with console.status(f"[cyan]Generating {cfg.count:,} {split} samples..."):
            dataset = generate_dataset(cfg, psi, dist, library, digest, output)

    console.print(f"[green]✓ Dataset written:[/green] {output}")
    console.print(
        f"  samples: {len(dataset):,}  points: {dataset.header.n_points:,}  mask: {cfg.mask}"
    )


# ── Training ──────────────────────────────────────────────────────────────────


@app.command()
def train(
    ctx: typer.Context,
    dataset: Path = typer.Option(None, "-d", "--dataset", help="Training dataset"),
    validation: Path = typer.Option(None, "--validation", help="Validation dataset"),
    model: Path = typer.Option(None, "--model", help="Model file (online mode)"),
    checkpoint: Path = typer.Option(None, "-o", "--checkpoint", help="Checkpoint to write"),
    log: Path = typer.Option(None, "--log", help="JSONL training log"),
    iterations: int = typer.Option(None, "--iterations", help="Total Adam iterations"),
    batch_size: int = typer.Option(None, "--batch-size", help="Mini-batch size"),
    learning_rate: float = typer.Option(None, "--lr", help="Adam learning rate"),
    seed: int = typer.Option(None, "--seed", help="Initialization and batch seed"),
    online: bool = typer.Option(False, "--online", help="Synthesize fresh pairs every batch"),
    resume: bool = typer.Option(False, "--resume", help="Continue from the checkpoint"),
) -> None:
    """Train the pose predictor."""
    run = _run(ctx)
    checkpoint = checkpoint or run.checkpoint_path
    log = log or checkpoint.with_suffix(".log.jsonl")
    validation = validation or run.validation_path

    with _handle_errors():
        cfg = _override(
            run.predictor,
            iterations=iterations,
            batch_size=batch_size,
            learning_rate=learning_rate,
            seed=seed,
        )
        dataset_digest = ""
        if online:
            psi, model_digest = _load_model(model or run.model_path)
            dist, library = build_priors(run.synthesis, psi)
            source = OnlineBatches(run.synthesis, psi, dist, library, cfg.input_scale)
        else:
            data_repo = repositories.create_dataset_repository(dataset or run.dataset_path)
            data = data_repo.load()
            dataset_digest = data_repo.digest()
            model_digest = data.header.model_digest
            source = DatasetBatches(data, cfg.input_scale)

        weights = None
        if resume:
            weights = repositories.create_checkpoint_repository(checkpoint).load(
                expected_points=source.n_points
            )
            console.print(f"[cyan]Resuming from iteration {weights.iteration:,}[/cyan]")
            if not online:
                source = DatasetBatches(data, weights.config.input_scale)

        validation_set = None
        if validation.exists():
            validation_set = repositories.create_dataset_repository(validation).load()
        else:
            console.print(f"[yellow]No validation set at {validation}, skipping validation[/yellow]")

        last_good = checkpoint.with_name(f"{checkpoint.stem}.last_good{checkpoint.suffix}")
        trainer = PredictorTrainer(
            cfg,
            log_path=log,
            on_diverge=repositories.create_checkpoint_repository(last_good).save,
        )
        with console.status(f"[cyan]Training to iteration {cfg.iterations:,}..."):
            omega = trainer.train(
                source, validation_set, weights, model_digest, dataset_digest
            )
        repositories.create_checkpoint_repository(checkpoint).save(omega)

    console.print(f"[green]✓ Checkpoint written:[/green] {checkpoint}")
    if trainer.log:
        last = trainer.log[-1]
        summary = f"  iteration: {last.iteration:,}  loss: {last.loss:.5f}"
        validated = [r for r in trainer.log if r.validation_md is not None]
        if validated:
            summary += f"  validation m_d: [cyan]{validated[-1].validation_md:.4f} mm[/cyan]"
        console.print(summary)


@app.command()
def baseline(
    ctx: typer.Context,
    dataset: Path = typer.Option(None, "-d", "--dataset", help="Dataset whose pairs train the map"),
    validation: Path = typer.Option(None, "--validation", help="Validation dataset (step search)"),
    model: Path = typer.Option(None, "--model", help="Model file"),
    output: Path = typer.Option(None, "-o", "--output", help="Confidence map file to write"),
    count: int = typer.Option(200, "-n", "--count", help="Pairs regenerated for training"),
    variant: CmapVariant = typer.Option(None, "--variant", help="Energy variant"),
    region: str = typer.Option(None, "--region", help="Region the map covers"),
    steps: int = typer.Option(None, "--steps", help="Gradient steps"),
    step_size: float = typer.Option(None, "--step-size", help="Gradient step size"),
    alpha_data: float = typer.Option(None, "--alpha-data"),
    alpha_reg: float = typer.Option(None, "--alpha-reg"),
    alpha_sigma: float = typer.Option(None, "--alpha-sigma"),
    alpha_nbhd: float = typer.Option(None, "--alpha-nbhd"),
    rho: float = typer.Option(None, "--rho", help="Hinge fraction of the weight norm"),
    k: int = typer.Option(None, "-k", "--neighbours", help="Neighbourhood size"),
    seed: int = typer.Option(None, "--seed", help="Mini-batch seed"),
    select_step: bool = typer.Option(
        False, "--select-step", help="Grid-search the step size on validation pairs"
    ),
) -> None:
    """Train the confidence-map baseline."""
    run = _run(ctx)
    output = output or run.cmap_path
    dataset = dataset or run.dataset_path

    with _handle_errors():
        if region is not None:
            check_region(region)
        cfg = _override(
            run.cmap,
            variant=variant,
            region=region,
            steps=steps,
            step_size=step_size,
            alpha_data=alpha_data,
            alpha_reg=alpha_reg,
            alpha_sigma=alpha_sigma,
            alpha_nbhd=alpha_nbhd,
            rho=rho,
            k=k,
            seed=seed,
        )
        psi, model_digest = _load_model(model or run.model_path)
        data_repo = repositories.create_dataset_repository(dataset)
        with console.status(f"[cyan]Regenerating {count} training pairs..."):
            train_pairs = regenerate_pairs(data_repo.load().head(count), psi)
        provenance = {
            "dataset_digest": data_repo.digest(),
            "model_digest": model_digest,
        }
        if select_step:
            val_repo = repositories.create_dataset_repository(validation or run.validation_path)
            val_pairs = regenerate_pairs(val_repo.load().head(count), psi)
            with console.status("[cyan]Searching step sizes..."):
                chosen, cmap = select_step_size(train_pairs, val_pairs, psi, cfg)
            cfg = cfg.model_copy(update={"step_size": chosen})
            provenance["validation_digest"] = val_repo.digest()
            console.print(f"[cyan]Selected step size {chosen:g}[/cyan]")
        else:
            with console.status(f"[cyan]Training {cfg.variant.value} map..."):
                cmap = cmap_train(train_pairs, psi, cfg)
        provenance["config"] = cfg.model_dump(mode="json")
        repositories.create_cmap_repository(output, provenance).save(cmap)

    console.print(f"[green]✓ Confidence map written:[/green] {output}")
    console.print(
        f"  region: {cmap.region} ({len(cmap):,} vertices)  variant: {cmap.variant}  "
        f"mean w: {cmap.weights.mean():.3f}  std w: {cmap.weights.std():.3f}"
    )


# ── Inference ─────────────────────────────────────────────────────────────────


@app.command()
def stabilize(
    ctx: typer.Context,
    source: Path = typer.Option(None, "-s", "--source", help="Source OBJ (model topology)"),
    target: Path = typer.Option(None, "-t", "--target", help="Target OBJ (model topology)"),
    output: Path = typer.Option(None, "-o", "--output", help="Stabilized source OBJ to write"),
    transform: Path = typer.Option(None, "--transform", help="4x4 transform JSON to write"),
    manifest: Path = typer.Option(
        None, "--manifest", help="JSON list of {source, target, output, transform} entries"
    ),
    checkpoint: Path = typer.Option(None, "--checkpoint", help="Trained predictor"),
    model: Path = typer.Option(None, "--model", help="Model file"),
    workers: int = typer.Option(None, "-w", "--workers", help="Worker threads (batch mode)"),
) -> None:
    """Stabilize a source mesh against a target mesh."""
    run = _run(ctx)
    checkpoint = checkpoint or run.checkpoint_path

    with _handle_errors():
        if manifest is not None:
            if not manifest.exists():
                raise StabilizerError(
                    Errors.FILE_NOT_FOUND, f"Manifest not found: {manifest}", filepath=str(manifest)
                )
            try:
                entries = json.loads(manifest.read_text(encoding="utf-8"))
                jobs = [
                    {
                        key: _resolve(manifest.parent, entry.get(key))
                        for key in ("source", "target", "output", "transform")
                    }
                    for entry in entries
                ]
            except (json.JSONDecodeError, AttributeError, TypeError) as e:
                raise StabilizerError(
                    Errors.INVALID_DATA_FORMAT, f"Invalid manifest {manifest}: {e}"
                ) from e
        else:
            jobs = [{"source": source, "target": target, "output": output, "transform": transform}]

        for job in jobs:
            if job["source"] is None or job["target"] is None:
                raise StabilizerError(Errors.INVALID_CONFIG, "every pair needs a source and a target")
            if job["output"] is None and job["transform"] is None:
                job["transform"] = job["source"].with_suffix(".transform.json")

        psi, model_digest = _load_model(model or run.model_path)
        weights, checkpoint_digest = _load_checkpoint(checkpoint, model_digest)
        pairs = [
            (read_model_mesh(job["source"], psi), read_model_mesh(job["target"], psi)) for job in jobs
        ]
        with console.status(f"[cyan]Stabilizing {len(pairs)} pair(s)..."):
            results = stabilize_batch(
                weights, pairs, psi, workers=workers or get_settings().workers
            )

        for job, (world, stabilized) in zip(jobs, results):
            if job["output"] is not None:
                export_obj(psi, stabilized, job["output"])
            if job["transform"] is not None:
                _write_transform(
                    job["transform"],
                    world.matrix.tolist(),
                    {
                        "source": str(job["source"]),
                        "target": str(job["target"]),
                        "source_digest": file_digest(job["source"]),
                        "target_digest": file_digest(job["target"]),
                        "checkpoint_digest": checkpoint_digest,
                        "model_digest": model_digest,
                    },
                )

    console.print(f"[green]✓ Stabilized {len(jobs)} pair(s)[/green]")
    for job in jobs[:5]:
        written = job["output"] or job["transform"]
        console.print(f"  {job['source'].name} → {written}")
    if len(jobs) > 5:
        console.print(f"  [dim]... and {len(jobs) - 5} more[/dim]")


# ── Evaluation ────────────────────────────────────────────────────────────────


@app.command("eval")
def evaluate(
    ctx: typer.Context,
    test: Path = typer.Option(None, "--test", help="Test dataset"),
    method: list[str] = typer.Option(
        None, "-m", "--method", help=f"Method to score (repeatable): {', '.join(METHOD_NAMES)}"
    ),
    model: Path = typer.Option(None, "--model", help="Model file"),
    checkpoint: Path = typer.Option(None, "--checkpoint", help="Predictor for 'ours'"),
    cmap: Path = typer.Option(None, "--cmap", help="Confidence map for 'cmap'"),
    count: int = typer.Option(None, "-n", "--count", help="Use the first n test pairs"),
    param_noise: float = typer.Option(
        0.0, "--param-noise", help="UNPOSE parameter noise level (1 = 1 degree / 1 mm)"
    ),
    noise_seed: int = typer.Option(0, "--noise-seed", help="Seed of the parameter noise"),
    output: Path = typer.Option(None, "-o", "--output", help="JSON report to write"),
    csv: Path = typer.Option(None, "--csv", help="Also write a CSV table"),
    markdown: Path = typer.Option(None, "--markdown", help="Also write a Markdown report"),
    workers: int = typer.Option(None, "-w", "--workers", help="Worker threads"),
) -> None:
    """Score stabilization methods on a synthetic test set."""
    run = _run(ctx)
    methods = method or _DEFAULT_METHODS
    test = test or run.test_path
    output = output or run.report_path

    with _handle_errors():
        psi, model_digest = _load_model(model or run.model_path)
        test_repo = repositories.create_dataset_repository(test)
        data = test_repo.load()
        if count is not None:
            data = data.head(count)
        inputs = {"model": model_digest, "test": test_repo.digest()}

        weights = None
        if "ours" in methods:
            weights, inputs["checkpoint"] = _load_checkpoint(
                checkpoint or run.checkpoint_path, model_digest
            )
        cmap_data = None
        if "cmap" in methods:
            cmap_repo = repositories.create_cmap_repository(cmap or run.cmap_path)
            cmap_data = cmap_repo.load()
            inputs["cmap"] = cmap_repo.digest()

        factory = StabilizerFactory(psi, weights, cmap_data, param_noise, noise_seed)
        stabilizers = factory.create_methods(methods)

        with console.status(f"[cyan]Regenerating {len(data):,} test pairs..."):
            pairs = regenerate_pairs(data, psi)
        service = EvaluationService(
            pairs, psi, run.evaluation, workers=workers or get_settings().workers
        )
        echo = {
            "run": run.model_dump(mode="json"),
            "methods": list(stabilizers),
            "param_noise": param_noise,
            "noise_seed": noise_seed,
            "count": len(data),
        }
        with console.status(f"[cyan]Evaluating {len(stabilizers)} method(s)..."):
            report = service.evaluate(stabilizers, config_echo=echo, inputs=inputs)

        report_repo = repositories.create_report_repository(output)
        report_repo.save(report)
        if csv is not None:
            report_repo.save_csv(report, csv)
        if markdown is not None:
            MarkdownReportGenerator().generate(report, markdown)

    _print_report(report)
    console.print(f"\n[bold green]✓ Report written:[/bold green] {output}")


# ── Ablations ─────────────────────────────────────────────────────────────────


def _ablation_service(
    run: RunConfig,
    model: Path | None,
    validation: Path | None,
    val_count: int,
    region: str,
    iterations: int | None,
) -> AblationService:
    check_region(region)
    predictor = _override(run.predictor, iterations=iterations)
    psi, model_digest = _load_model(model or run.model_path)
    data = repositories.create_dataset_repository(validation or run.validation_path).load()
    with console.status(f"[cyan]Regenerating {min(val_count, len(data))} validation pairs..."):
        pairs = regenerate_pairs(data.head(val_count), psi)
    service = AblationService(psi, predictor, pairs, region, run.evaluation, model_digest)
    return service


def _save_ablation(report: AblationReport, output: Path) -> None:
    repositories.create_ablation_repository(output).save(report)
    _print_ablation(report)
    console.print(f"\n[bold green]✓ Ablation written:[/bold green] {output}")


@ablate_app.command("dataset-size")
def ablate_dataset_size(
    ctx: typer.Context,
    size: list[int] = typer.Option(
        None, "--size", help="Training-set size (repeatable, default 500 1000 2000 4000)"
    ),
    dataset: Path = typer.Option(None, "-d", "--dataset", help="Training dataset to subsample"),
    validation: Path = typer.Option(None, "--validation", help="Validation dataset"),
    model: Path = typer.Option(None, "--model", help="Model file"),
    val_count: int = typer.Option(100, "--val-count", help="Validation pairs scored"),
    region: str = typer.Option("face", "--region", help="Scored region"),
    iterations: int = typer.Option(None, "--iterations", help="Adam iterations per run"),
    output: Path = typer.Option(None, "-o", "--output", help="Ablation JSON to write"),
) -> None:
    """Validation error against training-set size."""
    run = _run(ctx)
    output = output or run.report_path.with_name("ablation_dataset_size.json")
    with _handle_errors():
        service = _ablation_service(run, model, validation, val_count, region, iterations)
        data = repositories.create_dataset_repository(dataset or run.dataset_path).load()
        with console.status("[cyan]Training one predictor per size..."):
            report = service.dataset_size(data, size or [500, 1000, 2000, 4000])
        report.config["run"] = run.model_dump(mode="json")
        _save_ablation(report, output)


@ablate_app.command("coverage")
def ablate_coverage(
    ctx: typer.Context,
    mask: list[str] = typer.Option(
        None, "--mask", help=f"Input region (repeatable, default {' '.join(_DEFAULT_COVERAGE)})"
    ),
    validation: Path = typer.Option(None, "--validation", help="Validation dataset"),
    model: Path = typer.Option(None, "--model", help="Model file"),
    count: int = typer.Option(None, "-n", "--count", help="Training samples per mask"),
    val_count: int = typer.Option(100, "--val-count", help="Validation pairs scored"),
    region: str = typer.Option("face", "--region", help="Scored region"),
    iterations: int = typer.Option(None, "--iterations", help="Adam iterations per run"),
    output: Path = typer.Option(None, "-o", "--output", help="Ablation JSON to write"),
) -> None:
    """Validation error against the input region seen by the predictor."""
    run = _run(ctx)
    output = output or run.report_path.with_name("ablation_coverage.json")
    masks = mask or _DEFAULT_COVERAGE
    with _handle_errors():
        for name in masks:
            check_region(name)
        service = _ablation_service(run, model, validation, val_count, region, iterations)
        synthesis = _override(run.synthesis, count=count, workers=get_settings().workers)
        with console.status("[cyan]Training one predictor per input region..."):
            report = service.head_coverage(synthesis, masks)
        report.config["run"] = run.model_dump(mode="json")
        _save_ablation(report, output)


if __name__ == "__main__":
    app()
