"""Command-line entry point for simfuse."""

import functools
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click
from dotenv import load_dotenv

from .cluster.models import ClusterAlgorithm
from .cohort.loader import write_cohort
from .cohort.models import LABEL_NAMES
from .cohort.synthetic import generate_synthetic_cohort
from .distengine.coordinator import DEFAULT_RETRIES, DEFAULT_TIMEOUT_S, coordinate
from .distengine.models import JobManifest
from .distengine.worker import worker_connect, worker_serve
from .dtw.blocks import write_blocks_csv
from .errors import PipelineStageError, SimfuseError
from .evaluation.report import EvalReport, RunDescriptor, evaluate_run
from .pipeline.bench import bench_dtw, probe_kernel_memory
from .pipeline.orchestrator import run_pipeline
from .pipeline.run_store import RunStore
from .pipeline.sweep import SWEEP_AXES, run_grid, sweep
from .settings import DEFAULT_RUN_DIR, RUN_DIR_ENV, load_run_config
from .transform.models import TransformMethod


# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

# Load environment variables from a local .env file if present
load_dotenv()

AXIS_TYPES: Dict[str, Callable[[str], Any]] = {
    "k_clusters": int,
    "observation_hours": float,
    "workers": int,
}


def _split_list(text: Optional[str], cast: Callable[[str], Any] = str, name: str = "value") -> List[Any]:
    if text is None:
        return []
    try:
        return [cast(item.strip()) for item in text.split(",") if item.strip()]
    except ValueError:
        raise click.BadParameter(f"'{text}' is not a comma-separated list of {cast.__name__}", param_hint=name)


def run_options(command: Callable) -> Callable:
    """Flags shared by run, sweep and grid; each overrides --config."""
    options = [
        click.option('--cohort', 'cohort_dir', required=True, type=click.Path(exists=True, file_okay=False),
                     help='Cohort directory (static.csv plus series/)'),
        click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False),
                     help='Run configuration file (JSON or YAML)'),
        click.option('--target', type=click.Choice(LABEL_NAMES), help='Label to predict'),
        click.option('--dt-method', type=click.Choice([m.value for m in TransformMethod]),
                     help='Static-feature transform'),
        click.option('--clustering', type=click.Choice([a.value for a in ClusterAlgorithm]),
                     help='Clustering algorithm gating candidates'),
        click.option('--k-clusters', '-k', type=int, help='Number of clusters (125 for cad, 150 for chf)'),
        click.option('--lambda', 'lam', type=int, help='Nearest neighbors kept per variate'),
        click.option('--band', type=int, help='Sakoe-Chiba band radius'),
        click.option('--q', type=int, help='Target records per aWOE bin'),
        click.option('--epsilon', type=float, help='aWOE smoothing constant'),
        click.option('--seed', type=int, help='Seed for split and clustering'),
        click.option('--workers', type=int, help='Local DTW worker threads'),
        click.option('--endpoints', help='Comma-separated HOST:PORT of listening workers'),
        click.option('--observation-hours', type=float, help='Keep only the first N hours of each series'),
        click.option('--variates', help='Comma-separated subset of variate ids'),
        click.option('--block-size', type=int, help='Targets per distance task'),
        click.option('--timeout', 'timeout_s', type=float, help='Seconds before a task is reassigned'),
        click.option('--retries', type=int, help='Reassignments allowed per task'),
        click.option('--force', is_flag=True, help='Recompute even if the run directory has a report'),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _run_config(config_file: Optional[str], flags: Dict[str, Any], drop: tuple = ()):
    overrides = {k: v for k, v in flags.items() if k not in drop}
    if overrides.get("variates") is not None:
        overrides["variates"] = _split_list(overrides["variates"], name="--variates")
    if overrides.get("lam") is not None:
        overrides["lambda"] = overrides.pop("lam")
    else:
        overrides.pop("lam", None)
    return load_run_config(config_file, overrides)


def handle_errors(command: Callable) -> Callable:
    """Turn library errors into an error line on stderr and exit status 1."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except PipelineStageError as e:
            click.echo(f"Error in stage '{e.stage}': {e.cause}", err=True)
            sys.exit(1)
        except SimfuseError as e:
            logger.debug("Command failed", exc_info=True)
            click.echo(f"Error: {e}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
@click.option('--run-dir', envvar=RUN_DIR_ENV, default=DEFAULT_RUN_DIR, show_default=True,
              help=f'Artifact root (also {RUN_DIR_ENV})')
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose logging')
@click.pass_context
def cli(ctx: click.Context, run_dir: str, verbose: bool):
    """simfuse - distributed patient similarity with neighborhood fusion."""
    level = os.getenv("SIMFUSE_LOG_LEVEL")
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    elif level:
        logging.getLogger().setLevel(level.upper())
    ctx.obj = {"run_dir": Path(run_dir)}


@cli.command()
@click.option('--out', 'out_dir', required=True, type=click.Path(file_okay=False), help='Cohort directory to write')
@click.option('--n', 'n', default=500, show_default=True, help='Number of patients')
@click.option('--variates', default=4, show_default=True, help='Number of variates (1..18)')
@click.option('--series-len', default=100, show_default=True, help='Hourly samples per series')
@click.option('--signal', 'signal_strength', default=1.0, show_default=True, help='Class separation strength')
@click.option('--seed', default=0, show_default=True)
@click.option('--missing-rate', default=0.0, show_default=True, help='Fraction of series dropped')
@click.option('--prevalence', default=0.5, show_default=True, help='Share of positive cad labels')
@handle_errors
def gen(out_dir: str, n: int, variates: int, series_len: int, signal_strength: float,
        seed: int, missing_rate: float, prevalence: float):
    """Generate a synthetic cohort with a planted signal."""
    cohort = generate_synthetic_cohort(
        n, variates=variates, series_len=series_len, signal_strength=signal_strength,
        seed=seed, missing_rate=missing_rate, prevalence=prevalence,
    )
    static_path, series_dir = write_cohort(cohort, out_dir)
    click.echo(f"Wrote {len(cohort)} patients to {static_path} and {series_dir}")


@cli.command()
@run_options
@click.pass_context
@handle_errors
def run(ctx: click.Context, cohort_dir: str, config_file: Optional[str], force: bool, **flags):
    """Run the full pipeline for one configuration."""
    cfg = _run_config(config_file, flags)
    store = RunStore(ctx.obj["run_dir"])
    report = run_pipeline(cfg, cohort_dir=cohort_dir, store=store, force=force)
    display_report(report)


@cli.command("sweep")
@run_options
@click.option('--axis', required=True, type=click.Choice(SWEEP_AXES), help='Parameter to vary')
@click.option('--values', 'values_text', required=True, help='Comma-separated values of the axis')
@click.option('--repeats', default=1, show_default=True, help='Runs per value with consecutive seeds')
@click.pass_context
@handle_errors
def sweep_cmd(ctx: click.Context, cohort_dir: str, config_file: Optional[str], force: bool,
              axis: str, values_text: str, repeats: int, **flags):
    """Run the pipeline once per value of one parameter."""
    values = _split_list(values_text, AXIS_TYPES[axis], name="--values")
    if len(values) < 2:
        raise click.UsageError("--values needs at least two values")
    cfg = _run_config(config_file, flags)
    store = RunStore(ctx.obj["run_dir"])
    frame = sweep(cfg, axis, values, cohort_dir=cohort_dir, store=store, repeats=repeats, force=force)

    click.echo("\n" + "="*60)
    click.echo(f"📈 SWEEP OVER {axis.upper()}")
    click.echo("="*60)
    click.echo(frame.drop(columns=["error"]).to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    failed = frame[frame["error"] != ""]
    for _, row in failed.iterrows():
        click.echo(f"⚠️  {axis}={row[axis]}: {row['error']}", err=True)
    click.echo(f"\nTable written to {store.root / f'sweep_{axis}.csv'}")


@cli.command()
@run_options
@click.option('--targets', 'targets_text', default=",".join(LABEL_NAMES), show_default=True)
@click.option('--dt-methods', 'dt_text', default=",".join(m.value for m in TransformMethod), show_default=True)
@click.option('--clusterings', 'clusterings_text',
              default=",".join(a.value for a in ClusterAlgorithm if a is not ClusterAlgorithm.NONE),
              show_default=True)
@click.pass_context
@handle_errors
def grid(ctx: click.Context, cohort_dir: str, config_file: Optional[str], force: bool,
         targets_text: str, dt_text: str, clusterings_text: str, **flags):
    """Run every target x transform x clustering combination."""
    cfg = _run_config(config_file, flags, drop=("target", "dt_method", "clustering"))
    store = RunStore(ctx.obj["run_dir"])
    frame = run_grid(
        cfg,
        _split_list(targets_text, name="--targets"),
        _split_list(dt_text, name="--dt-methods"),
        _split_list(clusterings_text, name="--clusterings"),
        cohort_dir=cohort_dir,
        store=store,
        force=force,
    )
    click.echo("\n" + "="*60)
    click.echo("📊 EXPERIMENT GRID")
    click.echo("="*60)
    columns = ["target", "dt_method", "clustering", "auc", "f_measure", "f_measure_improvement_pct"]
    click.echo(frame[columns].to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    click.echo(f"\nTable written to {store.root / 'grid.csv'}")


@cli.command()
@click.option('--n-patients', 'n_text', default="100", show_default=True, help='Comma-separated patient counts')
@click.option('--series-len', 'len_text', default="100", show_default=True, help='Comma-separated series lengths')
@click.option('--workers', 'workers_text', default="1", show_default=True, help='Comma-separated worker counts')
@click.option('--seed', default=0, show_default=True)
@click.option('--memory-length', type=int, help='Also probe memory of one L x L alignment')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), help='Directory for bench.csv (default: run dir)')
@click.pass_context
@handle_errors
def bench(ctx: click.Context, n_text: str, len_text: str, workers_text: str, seed: int,
          memory_length: Optional[int], out_dir: Optional[str]):
    """Time the pairwise DTW phase."""
    frame = bench_dtw(
        _split_list(n_text, int, "--n-patients"),
        _split_list(len_text, int, "--series-len"),
        _split_list(workers_text, int, "--workers"),
        seed=seed,
        out_dir=out_dir or ctx.obj["run_dir"],
    )
    click.echo("\n" + "="*60)
    click.echo("⏱️  DTW BENCHMARK")
    click.echo("="*60)
    click.echo(frame.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    if memory_length:
        probe = probe_kernel_memory(memory_length, seed=seed)
        click.echo(
            f"\n🧠 {memory_length}x{memory_length} alignment: {probe['seconds']:.3f}s, "
            f"peak RSS +{probe['rss_growth_kib']:.0f} KiB "
            f"(full matrix: {probe['full_matrix_kib']:.0f} KiB)"
        )


@cli.command("coordinator")
@click.option('--job', 'job_path', required=True, type=click.Path(exists=True, dir_okay=False), help='job.json to run')
@click.option('--listen', 'listen_addr', required=True, help='HOST:PORT for workers to connect to')
@click.option('--timeout', 'timeout_s', default=DEFAULT_TIMEOUT_S, show_default=True)
@click.option('--retries', default=DEFAULT_RETRIES, show_default=True)
@click.option('--out', 'out_path', type=click.Path(dir_okay=False),
              help='Merged distances CSV (default: distances.csv next to the job)')
@handle_errors
def coordinator_cmd(job_path: str, listen_addr: str, timeout_s: float, retries: int, out_path: Optional[str]):
    """Serve a planned job to connecting workers."""
    manifest = JobManifest.read_json(job_path)
    click.echo(f"Job {manifest.job_id}: {len(manifest.tasks)} tasks, waiting for workers on {listen_addr}")
    blocks = coordinate(manifest, listen_addr, timeout_s=timeout_s, retries=retries)
    path = write_blocks_csv(blocks, out_path or Path(job_path).with_name("distances.csv"))
    click.echo(f"✅ Merged distances written to {path}")


@cli.command("worker")
@click.option('--cohort', 'cohort_dir', required=True, type=click.Path(exists=True, file_okay=False))
@click.option('--listen', 'listen_addr', help='HOST:PORT to accept coordinator sessions on')
@click.option('--connect', 'connect_addr', help='HOST:PORT of a listening coordinator')
@click.option('--retry', 'retry_s', default=30.0, show_default=True, help='Seconds to keep dialing --connect')
@handle_errors
def worker_cmd(cohort_dir: str, listen_addr: Optional[str], connect_addr: Optional[str], retry_s: float):
    """Serve DTW tasks for a coordinator."""
    if bool(listen_addr) == bool(connect_addr):
        raise click.UsageError("give exactly one of --listen or --connect")
    try:
        if listen_addr:
            worker_serve(listen_addr, cohort_dir)
        else:
            worker_connect(connect_addr, cohort_dir, retry_s=retry_s)
    except KeyboardInterrupt:
        click.echo("Worker stopped")
    except OSError as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(1)


@cli.command("eval")
@click.option('--predictions', 'predictions_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--target', required=True, type=click.Choice(LABEL_NAMES))
@click.option('--dt-method', default="awoe", show_default=True)
@click.option('--clustering', default="kmeans", show_default=True)
@click.option('--k-clusters', '-k', default=0, show_default=True)
@click.option('--lambda', 'lam', default=1, show_default=True)
@click.option('--ledger', 'ledger_path', type=click.Path(dir_okay=False), help='Results ledger to append to')
@handle_errors
def eval_cmd(predictions_path: str, target: str, dt_method: str, clustering: str,
             k_clusters: int, lam: int, ledger_path: Optional[str]):
    """Score a predictions file."""
    descriptor = RunDescriptor(target, dt_method, clustering, k_clusters, lam)
    report = evaluate_run(predictions_path, descriptor, ledger_path=ledger_path)
    display_report(report)


def display_report(report: EvalReport):
    """Display an evaluation report in a formatted way."""
    d = report.descriptor
    click.echo("\n" + "="*60)
    click.echo("📊 EVALUATION REPORT")
    click.echo("="*60)
    click.echo(f"🎯 Target: {d.target}")
    click.echo(f"🔧 Transform: {d.dt_method}   Clustering: {d.clustering} (K={d.k_clusters})   λ={d.lam}")
    click.echo(f"👥 Test patients: {report.n_test}")

    c = report.counts
    click.echo(f"\n🧮 TP={c.tp}  FP={c.fp}  FN={c.fn}  TN={c.tn}")
    click.echo("\n📈 Metrics:")
    degenerate = set(report.metrics.degenerate) | ({"auc"} if report.auc_degenerate else set())
    for name, value in report.metric_values().items():
        flag = "  (degenerate)" if name in degenerate else ""
        click.echo(f"    {name:<12} {value:.4f}{flag}")
    if report.wall_clock_s:
        click.echo(f"\n⏱️  Wall clock: {report.wall_clock_s:.2f}s")


if __name__ == "__main__":
    cli()
