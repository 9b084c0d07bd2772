"""In-process parallel execution of a job with a thread pool."""

import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Dict, List

from ..cohort.models import Cohort
from ..dtw.blocks import Row, VariateDistanceBlock
from ..errors import FingerprintMismatch, InvalidParameter
from .executor import TaskExecutor, merge_results
from .models import JobManifest

logger = logging.getLogger(__name__)


def run_local(manifest: JobManifest, cohort: Cohort, workers: int = 1) -> List[VariateDistanceBlock]:
    """Execute every task with `workers` threads and merge the results.

    The DTW kernel runs without the GIL, so threads run pairs in parallel. The
    merged output does not depend on the worker count or completion order.

    Args:
        manifest: Planned job.
        cohort: The raw cohort the manifest was planned on.
        workers: Number of concurrent executors (>= 1).

    Raises:
        FingerprintMismatch: If the cohort is not the one the job was planned on.
        InvalidParameter: If workers < 1.
    """
    if workers < 1:
        raise InvalidParameter(f"workers must be >= 1, got {workers}")
    executor = TaskExecutor(cohort)
    if executor.fingerprint != manifest.fingerprint:
        raise FingerprintMismatch(
            f"cohort fingerprint {executor.fingerprint[:12]} does not match job "
            f"{manifest.job_id} ({manifest.fingerprint[:12]})"
        )

    config = manifest.task_config
    executor.view(config["observation_hours"])

    started = time.perf_counter()
    results: Dict[int, List[Row]] = {}
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="simfuse-dtw") as pool:
        futures = {pool.submit(executor.run, spec, config): spec.task_id for spec in manifest.tasks}
        for future in as_completed(futures):
            results[futures[future]] = future.result()

    logger.info(
        f"Job {manifest.job_id}: {len(manifest.tasks)} tasks on {workers} local workers "
        f"in {time.perf_counter() - started:.2f}s"
    )
    return merge_results(manifest, results)
