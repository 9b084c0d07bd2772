"""Pipeline orchestration, experiment sweeps and benchmarks."""

from .run_store import RunStore
from .orchestrator import run_pipeline, stage
from .sweep import SWEEP_AXES, run_grid, sweep
from .bench import BenchRow, bench_dtw, probe_kernel_memory, time_pairwise

__all__ = [
    # Runs
    'RunStore',
    'run_pipeline',
    'stage',

    # Experiments
    'SWEEP_AXES',
    'run_grid',
    'sweep',

    # Benchmarks
    'BenchRow',
    'bench_dtw',
    'probe_kernel_memory',
    'time_pairwise',
]
