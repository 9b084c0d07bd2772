"""Per-variate distance blocks between target patients and their cluster candidates."""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..cluster.models import ClusterAssignment, cluster_of
from ..cohort.models import Cohort, TimeSeries
from ..errors import DtwError, InvalidParameter, UnknownTarget
from .kernel import DtwConfig, dtw_distance, dtw_one_to_many

logger = logging.getLogger(__name__)

MISSING = math.nan
BLOCK_COLUMNS = ("variate_id", "target_id", "candidate_id", "distance")

Row = Tuple[str, str, float]


def is_missing(distance: float) -> bool:
    return math.isnan(distance)


@dataclass(frozen=True, eq=False)
class VariateDistanceBlock:
    """Distances for one variate; row i holds target i against its candidates.

    Candidates are in ascending patient_id order. MISSING (NaN) marks a pair in
    which either patient lacks the variate, or a pair the kernel could not score.
    """
    variate_id: str
    target_ids: Tuple[str, ...]
    candidate_ids_per_target: Tuple[Tuple[str, ...], ...]
    distances: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if not (len(self.target_ids) == len(self.candidate_ids_per_target) == len(self.distances)):
            raise InvalidParameter("block rows are inconsistent")
        for candidates, row in zip(self.candidate_ids_per_target, self.distances):
            if len(candidates) != len(row):
                raise InvalidParameter("block row length differs from its candidate list")
            row.setflags(write=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, VariateDistanceBlock):
            return NotImplemented
        return (
            self.variate_id == other.variate_id
            and self.target_ids == other.target_ids
            and self.candidate_ids_per_target == other.candidate_ids_per_target
            and all(
                np.array_equal(a, b, equal_nan=True)
                for a, b in zip(self.distances, other.distances)
            )
        )

    __hash__ = None  # type: ignore[assignment]

    def row(self, target_id: str) -> Tuple[Tuple[str, ...], np.ndarray]:
        try:
            i = self.target_ids.index(target_id)
        except ValueError:
            raise UnknownTarget(f"target '{target_id}' not in block '{self.variate_id}'") from None
        return self.candidate_ids_per_target[i], self.distances[i]

    def iter_rows(self) -> Iterator[Row]:
        """(target, candidate, distance) for every non-MISSING pair, in block order."""
        for target, candidates, row in zip(
            self.target_ids, self.candidate_ids_per_target, self.distances
        ):
            for candidate, distance in zip(candidates, row.tolist()):
                if not is_missing(distance):
                    yield target, candidate, distance

    @property
    def n_pairs(self) -> int:
        return sum(len(c) for c in self.candidate_ids_per_target)

    @property
    def n_missing(self) -> int:
        return int(sum(np.isnan(row).sum() for row in self.distances))

    @classmethod
    def from_rows(
        cls,
        variate_id: str,
        target_ids: Sequence[str],
        candidate_ids_per_target: Sequence[Sequence[str]],
        rows: Iterable[Row],
    ) -> "VariateDistanceBlock":
        """Rebuild a block from scored pairs; pairs without a row are MISSING."""
        scored: Dict[Tuple[str, str], float] = {(t, c): d for t, c, d in rows}
        distances = []
        for target, candidates in zip(target_ids, candidate_ids_per_target):
            distances.append(
                np.array([scored.get((target, c), MISSING) for c in candidates], dtype=np.float64)
            )
        return cls(
            variate_id,
            tuple(target_ids),
            tuple(tuple(c) for c in candidate_ids_per_target),
            tuple(distances),
        )


def _pair_or_missing(query: TimeSeries, other: TimeSeries, cfg: DtwConfig) -> float:
    try:
        return dtw_distance(query, other, cfg)
    except DtwError as e:
        logger.debug(f"Pair {query.variate_id} left MISSING: {e}")
        return MISSING


def distance_block(
    cohort: Cohort,
    variate_id: str,
    target_ids: Sequence[str],
    candidate_ids_per_target: Sequence[Sequence[str]],
    cfg: Optional[DtwConfig] = None,
) -> VariateDistanceBlock:
    """Score explicit (target, candidates) lists for one variate."""
    cfg = cfg or DtwConfig()
    rows: List[np.ndarray] = []
    degraded = 0

    for target, candidates in zip(target_ids, candidate_ids_per_target):
        row = np.full(len(candidates), MISSING)
        query = cohort.record(target).series.get(variate_id)
        if query is not None:
            present = [
                i for i, c in enumerate(candidates) if variate_id in cohort.record(c).series
            ]
            if present:
                others = [cohort.record(candidates[i]).series[variate_id] for i in present]
                try:
                    scored = dtw_one_to_many(query, others, cfg)
                except DtwError as e:
                    logger.warning(f"{variate_id}/{target}: {e}; scoring pairs one at a time")
                    scored = np.array([_pair_or_missing(query, other, cfg) for other in others])
                degraded += int(np.isnan(scored).sum())
                row[present] = scored
        rows.append(row)

    if degraded:
        logger.warning(f"Variate {variate_id}: {degraded} pairs could not be aligned, marked MISSING")
    return VariateDistanceBlock(
        variate_id,
        tuple(target_ids),
        tuple(tuple(c) for c in candidate_ids_per_target),
        tuple(rows),
    )


def compute_block(
    cohort: Cohort,
    variate_id: str,
    targets: Sequence[str],
    assignment: ClusterAssignment,
    cfg: Optional[DtwConfig] = None,
    pool: Optional[Iterable[str]] = None,
) -> VariateDistanceBlock:
    """Distances from each target to its cluster candidates for one variate.

    Args:
        cohort: Cohort holding the series.
        variate_id: Variate to score.
        targets: Target ids, kept in the given order.
        assignment: Cluster assignment gating the candidates.
        cfg: DTW settings.
        pool: Ids eligible as candidates; defaults to the training split when
            the cohort has one, otherwise everyone in the assignment.

    Raises:
        InvalidParameter: If targets is empty.
        UnknownPatient: If a target is not in the assignment.
    """
    if not targets:
        raise InvalidParameter("compute_block needs at least one target")
    if pool is None and cohort.split is not None:
        pool = cohort.split.train_ids
    eligible = set(pool) if pool is not None else None
    candidates = [cluster_of(assignment, t, eligible) for t in targets]
    return distance_block(cohort, variate_id, targets, candidates, cfg)


def blocks_frame(blocks: Iterable[VariateDistanceBlock]) -> pd.DataFrame:
    records = [
        (block.variate_id, t, c, d) for block in blocks for t, c, d in block.iter_rows()
    ]
    return pd.DataFrame.from_records(records, columns=list(BLOCK_COLUMNS))


def write_blocks_csv(blocks: Iterable[VariateDistanceBlock], path: Union[str, Path]) -> Path:
    path = Path(path)
    frame = blocks_frame(blocks)
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {len(frame)} distances to {path}")
    return path
