"""Timing harness for the pairwise DTW phase."""

import logging
import resource
import time
from dataclasses import asdict, dataclass
from itertools import product
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..cluster.models import ClusterAssignment
from ..cohort.synthetic import generate_synthetic_cohort
from ..distengine.local import run_local
from ..distengine.planner import DEFAULT_BLOCK_SIZE, plan_job
from ..dtw.kernel import DtwConfig, dtw_distance, warm_up
from ..errors import InvalidParameter

logger = logging.getLogger(__name__)

BENCH_FILE = "bench.csv"


@dataclass(frozen=True)
class BenchRow:
    n_patients: int
    series_len: int
    workers: int
    seconds: float
    n_pairs: int
    seconds_per_target: float


def _check_at_least(name: str, values: Sequence[int], minimum: int) -> None:
    if not values:
        raise InvalidParameter(f"{name} needs at least one value")
    if any(v < minimum for v in values):
        raise InvalidParameter(f"{name} values must be >= {minimum}, got {list(values)}")


def time_pairwise(
    n_patients: int,
    series_len: int,
    workers: int,
    seed: int = 0,
    block_size: int = DEFAULT_BLOCK_SIZE,
    cfg: Optional[DtwConfig] = None,
) -> BenchRow:
    """Time all ordered pairs of n_patients single-variate series on the local pool."""
    cohort = generate_synthetic_cohort(n_patients, variates=1, series_len=series_len, seed=seed)
    ids = list(cohort.patient_ids)
    manifest = plan_job(
        cohort,
        cohort.variates,
        ids,
        ClusterAssignment.single(ids),
        block_size=block_size,
        cfg=cfg,
        pool=ids,
    )
    n_pairs = sum(len(spec.pairs()) for spec in manifest.tasks)

    started = time.perf_counter()
    run_local(manifest, cohort, workers=workers)
    seconds = time.perf_counter() - started
    logger.info(f"n={n_patients} len={series_len} workers={workers}: {seconds:.3f}s for {n_pairs} pairs")
    return BenchRow(n_patients, series_len, workers, seconds, n_pairs, seconds / n_patients)


def bench_dtw(
    n_patients: Sequence[int],
    series_len: Sequence[int],
    workers: Sequence[int],
    seed: int = 0,
    out_dir: Optional[Union[str, Path]] = None,
    block_size: int = DEFAULT_BLOCK_SIZE,
    cfg: Optional[DtwConfig] = None,
) -> pd.DataFrame:
    """Measure the full pairwise DTW phase for every parameter combination.

    Args:
        n_patients: Patient counts.
        series_len: Series lengths.
        workers: Local worker counts.
        seed: Seed of the synthetic cohorts.
        out_dir: Directory receiving bench.csv; nothing is written when None.

    Returns:
        One row per (n, len, workers) with seconds and seconds per target.
    """
    _check_at_least("n_patients", n_patients, 2)
    _check_at_least("series_len", series_len, 2)
    _check_at_least("workers", workers, 1)

    # compile the kernel outside the timed region
    warm_up()
    rows = [
        time_pairwise(n, length, w, seed=seed, block_size=block_size, cfg=cfg)
        for n, length, w in product(n_patients, series_len, workers)
    ]
    frame = pd.DataFrame([asdict(r) for r in rows])
    if out_dir is not None:
        out_path = Path(out_dir) / BENCH_FILE
        out_path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out_path, index=False)
        logger.info(f"Benchmark table written to {out_path}")
    return frame


def probe_kernel_memory(length: int, seed: int = 0) -> Dict[str, float]:
    """Run one length x length DTW and report time and peak-RSS growth in KiB.

    The kernel keeps two rows of the cost matrix, so the growth stays far below
    the length * length * 8 bytes a full matrix would need.
    """
    if length < 1:
        raise InvalidParameter(f"length must be >= 1, got {length}")
    rng = np.random.default_rng(seed)
    x = rng.normal(size=length)
    y = rng.normal(size=length)
    warm_up()

    before = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    started = time.perf_counter()
    distance = dtw_distance(x, y)
    seconds = time.perf_counter() - started
    after = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss

    full_matrix_kib = length * length * 8 / 1024
    logger.info(
        f"DTW {length}x{length}: {seconds:.3f}s, peak RSS +{after - before} KiB "
        f"(a full cost matrix would need {full_matrix_kib:.0f} KiB)"
    )
    return {
        "length": float(length),
        "seconds": seconds,
        "distance": distance,
        "rss_growth_kib": float(after - before),
        "full_matrix_kib": full_matrix_kib,
    }
