"""Distance engine: job planning, local thread pool and TCP coordinator/workers."""

from .models import JobManifest, TaskSpec, TaskState, TaskStatus
from .planner import DEFAULT_BLOCK_SIZE, config_digest, plan_job
from .executor import TaskExecutor, merge_results
from .local import run_local
from .coordinator import Coordinator, TaskTable, coordinate, run_distributed
from .worker import WorkerService, worker_connect, worker_serve

__all__ = [
    # Data models
    'JobManifest',
    'TaskSpec',
    'TaskState',
    'TaskStatus',

    # Planning and execution
    'DEFAULT_BLOCK_SIZE',
    'TaskExecutor',
    'config_digest',
    'merge_results',
    'plan_job',
    'run_local',

    # Network
    'Coordinator',
    'TaskTable',
    'WorkerService',
    'coordinate',
    'run_distributed',
    'worker_connect',
    'worker_serve',
]
