"""Sharding of the (variate x target) grid into tasks."""

import hashlib
import json
import logging
from typing import Any, Dict, Iterable, Mapping, Optional, Sequence

from ..cluster.models import ClusterAssignment, cluster_of
from ..cohort.models import Cohort
from ..cohort.operations import cohort_fingerprint
from ..dtw.kernel import DtwConfig
from ..errors import EmptyJob, InvalidParameter
from .models import JobManifest, TaskSpec

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 25


def normalize_config(config: Mapping[str, Any]) -> Dict[str, Any]:
    """Canonical task config, so 12 and 12.0 hours hash the same after a JSON trip."""
    band = config.get("band")
    hours = config.get("observation_hours")
    return {
        "band": None if band is None else int(band),
        "final_sqrt": bool(config.get("final_sqrt", True)),
        "observation_hours": None if hours is None else float(hours),
    }


def config_digest(config: Mapping[str, Any], fingerprint: str) -> str:
    payload = json.dumps(
        {"config": normalize_config(config), "fingerprint": fingerprint}, sort_keys=True
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def plan_job(
    cohort: Cohort,
    variates: Sequence[str],
    targets: Sequence[str],
    assignment: ClusterAssignment,
    block_size: int = DEFAULT_BLOCK_SIZE,
    cfg: Optional[DtwConfig] = None,
    observation_hours: Optional[float] = None,
    pool: Optional[Iterable[str]] = None,
) -> JobManifest:
    """Split the job into tasks of at most block_size targets per variate.

    Candidates are resolved here, once, so every executor scores the same pairs.
    Tasks are numbered variate-major in the given variate and target order.

    Args:
        cohort: Raw cohort the workers load (fingerprinted before truncation).
        variates: Variates to score.
        targets: Target patient ids.
        assignment: Cluster assignment gating candidates.
        block_size: Targets per task (>= 1).
        cfg: DTW settings.
        observation_hours: Window applied by executors before scoring.
        pool: Ids eligible as candidates; the training split by default.

    Raises:
        EmptyJob: If there are no targets or no variates.
        InvalidParameter: If block_size < 1.
    """
    if block_size < 1:
        raise InvalidParameter(f"block_size must be >= 1, got {block_size}")
    if not targets:
        raise EmptyJob("job has no targets")
    if not variates:
        raise EmptyJob("job has no variates")

    cfg = cfg or DtwConfig()
    if observation_hours is not None:
        if observation_hours <= 0:
            raise InvalidParameter(f"observation_hours must be positive, got {observation_hours}")
        observation_hours = float(observation_hours)
    if pool is None and cohort.split is not None:
        pool = cohort.split.train_ids
    eligible = set(pool) if pool is not None else None
    candidates = {t: cluster_of(assignment, t, eligible) for t in targets}

    fingerprint = cohort_fingerprint(cohort)
    config: Dict[str, Any] = {
        "band": cfg.band,
        "final_sqrt": cfg.final_sqrt,
        "observation_hours": observation_hours,
    }
    digest = config_digest(config, fingerprint)

    tasks = []
    for variate_id in variates:
        for start in range(0, len(targets), block_size):
            block = tuple(targets[start:start + block_size])
            tasks.append(
                TaskSpec(
                    task_id=len(tasks),
                    variate_id=variate_id,
                    target_ids=block,
                    candidate_ids=tuple(candidates[t] for t in block),
                    digest=digest,
                )
            )

    job_hash = hashlib.sha256(
        json.dumps([digest, [t.to_dict() for t in tasks]], sort_keys=True).encode("utf-8")
    ).hexdigest()
    manifest = JobManifest(
        job_id=job_hash[:12],
        fingerprint=fingerprint,
        dtw=cfg,
        observation_hours=observation_hours,
        variates=tuple(variates),
        tasks=tuple(tasks),
    )
    logger.info(
        f"Planned job {manifest.job_id}: {len(variates)} variates x {len(targets)} targets "
        f"-> {len(tasks)} tasks (block_size={block_size})"
    )
    return manifest
