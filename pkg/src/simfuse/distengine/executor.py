"""Execution of task specs against a loaded cohort, and deterministic merging."""

import logging
import threading
from typing import Any, Dict, List, Mapping, Optional

from ..cohort.models import Cohort
from ..cohort.operations import cohort_fingerprint, truncate_observation_window
from ..dtw.blocks import Row, VariateDistanceBlock, distance_block
from ..dtw.kernel import DtwConfig
from ..errors import JobIncomplete
from .models import JobManifest, TaskSpec
from .planner import config_digest

logger = logging.getLogger(__name__)


class TaskExecutor:
    """Scores tasks for one raw cohort; shared by the local pool and TCP workers."""

    def __init__(self, cohort: Cohort):
        self.cohort = cohort
        self.fingerprint = cohort_fingerprint(cohort)
        self._views: Dict[Optional[float], Cohort] = {None: cohort}
        self._lock = threading.Lock()

    def view(self, observation_hours: Optional[float]) -> Cohort:
        """The cohort truncated to the observation window, computed once per window."""
        with self._lock:
            if observation_hours not in self._views:
                self._views[observation_hours] = truncate_observation_window(
                    self.cohort, observation_hours
                )
            return self._views[observation_hours]

    def digest_for(self, config: Mapping[str, Any]) -> str:
        return config_digest(config, self.fingerprint)

    def run(self, spec: TaskSpec, config: Mapping[str, Any]) -> List[Row]:
        cfg = DtwConfig(band=config.get("band"), final_sqrt=config.get("final_sqrt", True))
        cohort = self.view(config.get("observation_hours"))
        block = distance_block(cohort, spec.variate_id, spec.target_ids, spec.candidate_ids, cfg)
        rows = list(block.iter_rows())
        logger.debug(f"Task {spec.task_id} ({spec.variate_id}): {len(rows)} distances")
        return rows


def merge_results(
    manifest: JobManifest, results: Mapping[int, List[Row]]
) -> List[VariateDistanceBlock]:
    """One block per variate, tasks concatenated in manifest order.

    Raises:
        JobIncomplete: If any task has no result.
    """
    missing = [spec.task_id for spec in manifest.tasks if spec.task_id not in results]
    if missing:
        raise JobIncomplete(f"{len(missing)} tasks have no result: {missing[:10]}")

    blocks = []
    for variate_id in manifest.variates:
        targets: List[str] = []
        candidates: List[tuple] = []
        rows: List[Row] = []
        for spec in manifest.tasks_for(variate_id):
            targets.extend(spec.target_ids)
            candidates.extend(spec.candidate_ids)
            rows.extend(results[spec.task_id])
        blocks.append(VariateDistanceBlock.from_rows(variate_id, targets, candidates, rows))
    return blocks
