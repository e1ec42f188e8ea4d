# distress_transfer/cli.py
"""
Command-line front end.

Every command runs its work in named stages; a failing stage exits with the
code mapped to it in errors.EXIT_CODES and prints a JSON error payload on
stderr.
"""
import json
import logging
from dataclasses import dataclass, field
from functools import wraps
from pathlib import Path
from typing import Any, Dict, Optional

import click

from .config import Config, PipelineConfig, load_pipeline_config
from .corpus import documents_to_frame
from .domainadapt import adapt as adapt_sequence
from .errors import (
    STAGE_ADAPT,
    STAGE_CONFIG,
    STAGE_FEATURES,
    STAGE_INDEX,
    STAGE_INGEST,
    STAGE_OUTPUT,
    STAGE_REPORT,
    STAGE_SYNTH,
    STAGE_TRAIN,
    DistressError,
    ReportError,
)
from .index import bdi, daily_counts, emit
from .manifest import RunManifest, format_table, report_table, write_report
from .models import save_model
from .models.selection import cv_table_to_csv
from .synth import SynthSpec, generate
from .transfer import (
    PredictedTarget,
    adapt_domains,
    assemble_features,
    estimate_target_ratio,
    labelled_target_rows,
    load_corpora,
    run_pipeline,
    split_source,
    train_candidates,
)
from .utils.run_logging import configure_logging, create_error_payload, get_run_id, set_run_id, stage

logger = logging.getLogger(__name__)


@dataclass
class CliState:
    config_path: Optional[Path] = None
    overrides: Dict[str, Any] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)

    def load_config(self, require_inputs: bool = True) -> PipelineConfig:
        with stage(STAGE_CONFIG, self.timings):
            config = load_pipeline_config(self.config_path).with_overrides(**self.overrides)
            if require_inputs:
                config.require_inputs()
        return config

    def out_dir(self, config: Optional[PipelineConfig] = None) -> Path:
        with stage(STAGE_OUTPUT, self.timings):
            path = Path(self.overrides.get("out_dir") or (config.out_dir if config else Config.OUT_DIR))
            path.mkdir(parents=True, exist_ok=True)
        return path


def exits_on_error(f):
    """Map DistressError to its stage exit code; anything else exits 1."""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except DistressError as e:
            click.echo(json.dumps(create_error_payload(e)), err=True)
            raise SystemExit(e.exit_code)
        except (click.ClickException, click.exceptions.Exit, SystemExit):
            raise
        except Exception as e:
            logger.exception(f"Unexpected error: {{'run_id': '{get_run_id()}', 'error': '{e}'}}")
            click.echo(json.dumps(create_error_payload(e)), err=True)
            raise SystemExit(create_error_payload(e)["exit_code"])
    return decorated_function


@click.group()
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
              help=f"Pipeline TOML file, e.g. {Config.DEMO_CONFIG_PATH}.")
@click.option("--seed", type=int, default=None, help="Master seed (overrides the config).")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker thread cap.")
@click.option("--out-dir", type=click.Path(path_type=Path), default=None, help="Output directory.")
@click.option("--log-level", default=None, help="Logging level (default DT_LOG_LEVEL or INFO).")
@click.pass_context
def cli(ctx, config_path, seed, threads, out_dir, log_level):
    """Transfer learning for distress detection and the daily distress index."""
    configure_logging(log_level or Config.LOG_LEVEL)
    set_run_id()
    overrides = {"seed": seed, "threads": threads, "out_dir": out_dir}
    ctx.obj = CliState(config_path=config_path, overrides={k: v for k, v in overrides.items() if v is not None})


@cli.command("synth")
@click.option("--source-posts", "n_source_posts", type=int, default=SynthSpec.n_source_posts, show_default=True)
@click.option("--target-posts", "n_target_posts", type=int, default=SynthSpec.n_target_posts, show_default=True)
@click.option("--shift", type=float, default=SynthSpec.shift, show_default=True, help="Shift magnitude in within-class standard deviations.")
@click.option("--shift-fraction", type=float, default=SynthSpec.shift_fraction, show_default=True)
@click.option("--target-distress-fraction", type=float, default=SynthSpec.target_distress_fraction, show_default=True)
@click.option("--sample-size", type=int, default=SynthSpec.sample_size, show_default=True)
@click.option("--target-days", type=int, default=SynthSpec.target_days, show_default=True)
@click.option("--non-english-fraction", type=float, default=SynthSpec.non_english_fraction, show_default=True)
@click.pass_obj
@exits_on_error
def synth_command(state: CliState, **options):
    """Generate synthetic source and target post files."""
    out_dir = state.out_dir()
    seed = state.overrides.get("seed", PipelineConfig.seed)
    with stage(STAGE_SYNTH, state.timings):
        result = generate(SynthSpec(**options), seed, out_dir)
    click.echo(f"✓ Source posts: {result.source_posts}")
    click.echo(f"✓ Target posts: {result.target_posts}")
    click.echo(f"✓ Labelled target sample: {result.target_sample_labels}")
    click.echo(f"✓ Generator manifest: {result.manifest}")


@cli.command("ingest")
@click.pass_obj
@exits_on_error
def ingest_command(state: CliState):
    """Ingest both corpora and write their daily documents."""
    config = state.load_config()
    out_dir = state.out_dir(config)
    with stage(STAGE_INGEST, state.timings):
        source_docs, target_docs = load_corpora(config)
    with stage(STAGE_OUTPUT, state.timings):
        documents_to_frame(source_docs).to_csv(out_dir / "source_documents.csv", index=False, lineterminator="\n")
        documents_to_frame(target_docs).to_csv(out_dir / "target_documents.csv", index=False, lineterminator="\n")
    click.echo(f"✓ {len(source_docs)} source and {len(target_docs)} target daily documents written to {out_dir}")


def _features(state: CliState, config: PipelineConfig):
    with stage(STAGE_INGEST, state.timings):
        source_docs, target_docs = load_corpora(config)
    with stage(STAGE_FEATURES, state.timings):
        return assemble_features(config, source_docs, target_docs)


@cli.command("features")
@click.pass_obj
@exits_on_error
def features_command(state: CliState):
    """Build and select features; write both matrices and the selection report."""
    config = state.load_config()
    out_dir = state.out_dir(config)
    source, target, report = _features(state, config)
    with stage(STAGE_OUTPUT, state.timings):
        source.to_csv(out_dir / "source_features.csv")
        target.to_csv(out_dir / "target_features.csv")
        (out_dir / "feature_report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    click.echo(f"✓ {len(source.spec)} features: {report.to_dict()}")


@cli.command("adapt")
@click.pass_obj
@exits_on_error
def adapt_command(state: CliState):
    """Run the adaptation sequence and write the adaptation report and adapted matrices."""
    config = state.load_config()
    out_dir = state.out_dir(config)
    source, target, _ = _features(state, config)
    with stage(STAGE_ADAPT, state.timings):
        ratio = config.target_ratio if config.target_ratio is not None else estimate_target_ratio(target)
        source, target, report = adapt_sequence(source, target, ratio, config.seed, config.threads)
    with stage(STAGE_OUTPUT, state.timings):
        report.to_csv(out_dir / "adaptation.csv")
        report.write_json(out_dir / "adaptation.json")
        source.to_csv(out_dir / "adapted_source_features.csv")
        target.to_csv(out_dir / "adapted_target_features.csv")
    summary = report.to_dict()
    click.echo(
        f"✓ {summary['features_tested']} features tested; significant before {summary['significant_before']}, "
        f"after {summary['significant_after']} (alpha {summary['alpha']})"
    )


@cli.command("train")
@click.pass_obj
@exits_on_error
def train_command(state: CliState):
    """Grid-search and train every configured classifier on the source training split."""
    config = state.load_config()
    out_dir = state.out_dir(config)
    source, target, _ = _features(state, config)
    with stage(STAGE_ADAPT, state.timings):
        source, target, _ = adapt_domains(config, source, target)
    with stage(STAGE_TRAIN, state.timings):
        train_idx, _ = split_source(source, config.test_fraction, config.seed)
        models, records = train_candidates(config, source.take_rows(train_idx))
    with stage(STAGE_OUTPUT, state.timings):
        for model in models:
            save_model(model, out_dir / f"model_{model.kind.value}.json", {"config_hash": config.config_hash()})
        cv_table_to_csv(records, out_dir / "cv_table.csv")
    for model in models:
        click.echo(f"✓ {model.kind.value.upper():4} {model.hp.label()}")


@cli.command("run")
@click.option("--weighted/--unweighted", default=None, help="Override the configured condition.")
@click.pass_obj
@exits_on_error
def run_command(state: CliState, weighted: Optional[bool]):
    """Full transfer run plus the distress index; writes a manifest and all tables."""
    config = state.load_config().with_overrides(weighted=weighted)
    out_dir = state.out_dir(config)
    run = run_pipeline(config)
    state.timings.update(run.timings)

    with stage(STAGE_INDEX, state.timings):
        series = bdi(daily_counts(run.predictions, config.index_unit))
        emit(series, out_dir / "index.csv", out_dir / "index.svg", config.annotations)

    with stage(STAGE_OUTPUT, state.timings):
        outputs = [out_dir / "index.csv", out_dir / "index.svg"]
        metrics = run.metrics_table()
        metrics.to_csv(out_dir / "metrics.csv", index=False, lineterminator="\n")
        cv_table_to_csv(run.cv_records, out_dir / "cv_table.csv")
        run.predictions.to_csv(out_dir / "predictions.csv")
        save_model(run.selected_model, out_dir / "model.json", {"config_hash": config.config_hash(), "condition": run.condition})
        outputs += [out_dir / name for name in ("metrics.csv", "cv_table.csv", "predictions.csv", "model.json")]
        ranking = run.feature_ranking()
        if ranking is not None:
            ranking.to_csv(out_dir / "feature_ranking.csv", index=False, lineterminator="\n")
            outputs.append(out_dir / "feature_ranking.csv")
        if run.adaptation is not None:
            run.adaptation.to_csv(out_dir / "adaptation.csv")
            run.adaptation.write_json(out_dir / "adaptation.json")
            outputs += [out_dir / "adaptation.csv", out_dir / "adaptation.json"]

        manifest = RunManifest(
            run_id=get_run_id(),
            condition=run.condition,
            config=config.to_dict(),
            config_hash=config.config_hash(),
            seeds={"seed": config.seed},
            selected=run.selected.value,
            metrics=metrics.to_dict(orient="records"),
            timings=dict(state.timings),
            details={
                "split": run.split,
                "features": run.feature_report.to_dict(),
                "feature_names": run.spec.names,
                "adaptation": run.adaptation.to_dict() if run.adaptation is not None else None,
                "predictions": run.predictions.counts(),
                "index": series.stats(),
            },
        )
        manifest.record_outputs(outputs)
        manifest.write(out_dir / "manifest.json")

    click.echo(format_table(metrics))
    click.echo(f"✓ Selected {run.selected.value.upper()} ({run.condition}); outputs in {out_dir}")


@cli.command("index")
@click.option("--predictions", "predictions_path", type=click.Path(path_type=Path), default=None,
              help="Predictions CSV (default <out-dir>/predictions.csv).")
@click.option("--unit", type=click.Choice(["rows", "posts"]), default=None, help="Counting unit.")
@click.option("--annotations", type=click.Path(path_type=Path), default=None, help="Event CSV date,label.")
@click.pass_obj
@exits_on_error
def index_command(state: CliState, predictions_path, unit, annotations):
    """Recompute the distress index from a predictions CSV."""
    config = state.load_config(require_inputs=False)
    out_dir = state.out_dir(config)
    with stage(STAGE_INDEX, state.timings):
        predicted = PredictedTarget.from_csv(predictions_path or out_dir / "predictions.csv")
        series = bdi(daily_counts(predicted, unit or config.index_unit))
        emit(series, out_dir / "index.csv", out_dir / "index.svg", annotations or config.annotations)
    click.echo(f"✓ Index over {len(series)} days written to {out_dir}")


@cli.command("report")
@click.argument("manifests", nargs=-1, type=click.Path(path_type=Path))
@click.option("--csv", "csv_path", type=click.Path(path_type=Path), default=None,
              help="Report CSV (default <out-dir>/report.csv).")
@click.pass_obj
@exits_on_error
def report_command(state: CliState, manifests, csv_path):
    """Compare run manifests: model x condition x data metrics."""
    with stage(STAGE_REPORT, state.timings):
        if not manifests:
            raise ReportError("Give at least one manifest")
        table = report_table([RunManifest.load(path) for path in manifests])
    out_dir = state.out_dir()
    with stage(STAGE_OUTPUT, state.timings):
        write_report(table, csv_path or out_dir / "report.csv")
    click.echo(format_table(table))


def main():
    cli(prog_name="distress-transfer")


if __name__ == "__main__":
    main()
