"""End-to-end pipeline: split, transform, cluster, distances, fusion, evaluation."""

import logging
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional, Union

from ..cluster.dispatch import assign_clusters
from ..cluster.models import write_assignment_csv
from ..cohort.loader import load_cohort_dir
from ..cohort.models import Cohort
from ..cohort.operations import cohort_fingerprint, split_cohort
from ..distengine.coordinator import run_distributed
from ..distengine.local import run_local
from ..distengine.planner import plan_job
from ..dtw.blocks import write_blocks_csv
from ..errors import InvalidParameter, PipelineStageError, SimfuseError
from ..evaluation.report import EvalReport, evaluate_run, write_report_json
from ..fusion.predictions import predict_targets, write_predictions_csv
from ..settings import RunConfig
from ..transform.pipeline import fit_transform, write_transform_params
from .run_store import REPORT_FILE, RunStore

logger = logging.getLogger(__name__)

CLUSTERS_FILE = "clusters.csv"
JOB_FILE = "job.json"
DISTANCES_FILE = "distances.csv"
PREDICTIONS_FILE = "predictions.csv"


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Attribute any hard error raised inside the block to stage `name`."""
    started = time.perf_counter()
    try:
        yield
    except PipelineStageError:
        raise
    except (SimfuseError, OSError) as e:
        logger.error(f"Stage '{name}' failed: {e}")
        raise PipelineStageError(name, e) from e
    logger.debug(f"Stage '{name}' took {time.perf_counter() - started:.2f}s")


def run_pipeline(
    cfg: RunConfig,
    cohort_dir: Optional[Union[str, Path]] = None,
    cohort: Optional[Cohort] = None,
    store: Optional[RunStore] = None,
    force: bool = False,
) -> EvalReport:
    """Run one configuration end to end and file its report.

    Every intermediate artifact lands in a run directory named after the
    configuration and cohort hash. A completed run is not recomputed unless
    force is set.

    Args:
        cfg: Validated run configuration.
        cohort_dir: Cohort directory; also what distributed workers must hold.
        cohort: An already loaded cohort, used instead of reading cohort_dir.
        store: Artifact root; SIMFUSE_RUN_DIR or ./runs by default.
        force: Recompute even if the run directory holds a report.

    Returns:
        The evaluation report of the run.

    Raises:
        PipelineStageError: Wrapping the first hard error and its stage.
    """
    if cohort_dir is None and cohort is None:
        raise InvalidParameter("run_pipeline needs a cohort directory or a loaded cohort")
    store = store or RunStore()
    started = time.perf_counter()

    with stage("load"):
        raw = cohort if cohort is not None else load_cohort_dir(cohort_dir)
        fingerprint = cohort_fingerprint(raw)

    with stage("validate"):
        cfg.check_cohort(raw)

    if not force and store.is_complete(cfg, fingerprint):
        logger.info(f"Found completed run at {store.run_path(cfg, fingerprint)}, reusing its report")
        return store.load_report(cfg, fingerprint)

    run_dir = store.prepare(cfg, fingerprint, force)
    logger.info(f"Running {cfg.run_name(fingerprint)} on {len(raw)} patients")

    with stage("split"):
        split = split_cohort(raw, cfg.test_fraction, cfg.seed)
        train_ids = split.split.train_ids
        test_ids = split.split.test_ids

    with stage("transform"):
        transformed, fitted = fit_transform(
            split, cfg.dt_method, cfg.target, cfg.epsilon, cfg.unique_threshold, cfg.q
        )
        write_transform_params(fitted, run_dir)

    with stage("cluster"):
        # train and test are clustered together; only train members become candidates
        ids = list(transformed.patient_ids)
        assignment = assign_clusters(
            cfg.clustering,
            transformed.static_matrix(ids),
            ids,
            cfg.cluster_count,
            seed=cfg.seed,
            gamma=cfg.gamma,
            min_samples=cfg.min_samples,
            eps_extract=cfg.eps_extract,
            max_iter=cfg.kmeans_max_iter,
            tol=cfg.kmeans_tol,
        )
        write_assignment_csv(assignment, run_dir / CLUSTERS_FILE, ids)

    with stage("plan"):
        variates = list(cfg.variates) if cfg.variates else raw.variates
        manifest = plan_job(
            split,
            variates,
            list(test_ids),
            assignment,
            block_size=cfg.block_size,
            cfg=cfg.dtw_config(),
            observation_hours=cfg.observation_hours,
            pool=train_ids,
        )
        manifest.write_json(run_dir / JOB_FILE)

    with stage("distances"):
        if cfg.endpoints:
            blocks = run_distributed(
                manifest,
                cohort_dir if cohort is None else None,
                cfg.endpoints,
                timeout_s=cfg.timeout_s,
                retries=cfg.retries,
            )
        else:
            blocks = run_local(manifest, split, workers=cfg.workers)
        write_blocks_csv(blocks, run_dir / DISTANCES_FILE)

    with stage("fusion"):
        predictions = predict_targets(
            blocks,
            test_ids,
            split.labels(cfg.target, train_ids),
            cfg.target,
            lam=cfg.lam,
            truth=split.labels(cfg.target, test_ids),
        )
        predictions_path = write_predictions_csv(predictions, run_dir / PREDICTIONS_FILE)

    with stage("evaluate"):
        report = evaluate_run(
            predictions_path,
            cfg.descriptor(),
            ledger_path=store.ledger_path,
            wall_clock_s=round(time.perf_counter() - started, 3),
        )
        write_report_json(report, run_dir / REPORT_FILE)

    logger.info(f"Run complete in {report.wall_clock_s:.2f}s, artifacts in {run_dir}")
    return report
