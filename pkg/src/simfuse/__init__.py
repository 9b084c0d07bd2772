"""simfuse: patient similarity over static clusters and fused DTW neighborhoods."""

__version__ = "0.1.0"

# Export main components
from .cohort import Cohort, generate_synthetic_cohort, load_cohort, load_cohort_dir, split_cohort
from .transform import fit_transform
from .cluster import assign_clusters
from .dtw import DtwConfig, dtw_distance
from .distengine import plan_job, run_distributed, run_local
from .fusion import fuse, predict
from .evaluation import EvalReport, evaluate_run
from .settings import RunConfig, load_run_config
from .pipeline import run_pipeline

__all__ = [
    'Cohort', 'generate_synthetic_cohort', 'load_cohort', 'load_cohort_dir', 'split_cohort',
    'fit_transform', 'assign_clusters', 'DtwConfig', 'dtw_distance',
    'plan_job', 'run_distributed', 'run_local', 'fuse', 'predict',
    'EvalReport', 'evaluate_run', 'RunConfig', 'load_run_config', 'run_pipeline'
]
