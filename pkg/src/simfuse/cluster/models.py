"""Cluster assignment model and candidate gating."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..errors import EmptyInput, InvalidParameter, UnknownPatient

logger = logging.getLogger(__name__)

NOISE = -1


class ClusterAlgorithm(str, Enum):
    KMEANS = "kmeans"
    AGGLOMERATIVE = "agglomerative"
    SPECTRAL = "spectral"
    OPTICS = "optics"
    NONE = "none"  # every patient in one group


def as_points(points: Any) -> np.ndarray:
    """Validate a point matrix: 2-D float array with at least one row."""
    matrix = np.asarray(points, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise EmptyInput("clustering needs a non-empty N x d point matrix")
    if not np.all(np.isfinite(matrix)):
        raise InvalidParameter("point matrix contains non-finite values")
    return matrix


def default_ids(n: int, ids: Optional[Sequence[str]]) -> Tuple[str, ...]:
    if ids is None:
        return tuple(str(i) for i in range(n))
    if len(ids) != n:
        raise InvalidParameter(f"got {len(ids)} ids for {n} points")
    return tuple(ids)


def relabel_contiguous(raw: Sequence[int]) -> Tuple[np.ndarray, Dict[int, int]]:
    """Renumber cluster labels 0..C-1 by first appearance; NOISE stays NOISE."""
    mapping: Dict[int, int] = {}
    out = np.empty(len(raw), dtype=np.int64)
    for i, label in enumerate(raw):
        label = int(label)
        if label == NOISE:
            out[i] = NOISE
            continue
        if label not in mapping:
            mapping[label] = len(mapping)
        out[i] = mapping[label]
    return out, mapping


@dataclass(frozen=True)
class ClusterAssignment:
    """Partition of patients into clusters, plus OPTICS noise."""
    algorithm: ClusterAlgorithm
    params: Dict[str, Any]
    labels: Dict[str, int]  # patient_id -> cluster id >= 0
    noise_ids: FrozenSet[str] = frozenset()
    diagnostics: Dict[str, Any] = field(default_factory=dict, compare=False, repr=False)
    _members: Dict[int, Tuple[str, ...]] = field(
        init=False, default_factory=dict, compare=False, repr=False
    )

    def __post_init__(self):
        overlap = set(self.labels) & set(self.noise_ids)
        if overlap:
            raise InvalidParameter(f"patients both clustered and noise: {sorted(overlap)[:5]}")
        members: Dict[int, List[str]] = {}
        for patient_id, cluster_id in self.labels.items():
            members.setdefault(cluster_id, []).append(patient_id)
        if members and sorted(members) != list(range(len(members))):
            raise InvalidParameter("cluster ids must be contiguous from 0")
        object.__setattr__(
            self, "_members", {c: tuple(sorted(ids)) for c, ids in members.items()}
        )

    @classmethod
    def from_array(
        cls,
        algorithm: Union[ClusterAlgorithm, str],
        params: Dict[str, Any],
        ids: Sequence[str],
        raw_labels: Sequence[int],
        diagnostics: Optional[Dict[str, Any]] = None,
    ) -> "ClusterAssignment":
        contiguous, _ = relabel_contiguous(raw_labels)
        labels = {pid: int(c) for pid, c in zip(ids, contiguous) if c != NOISE}
        noise = frozenset(pid for pid, c in zip(ids, contiguous) if c == NOISE)
        return cls(ClusterAlgorithm(algorithm), dict(params), labels, noise, diagnostics or {})

    @classmethod
    def single(cls, ids: Iterable[str]) -> "ClusterAssignment":
        """Everyone in cluster 0, the non-clustering baseline."""
        return cls(ClusterAlgorithm.NONE, {}, {pid: 0 for pid in ids})

    @property
    def n_clusters(self) -> int:
        return len(self._members)

    @property
    def patient_ids(self) -> List[str]:
        return sorted(set(self.labels) | set(self.noise_ids))

    def cluster_id(self, patient_id: str) -> int:
        if patient_id in self.labels:
            return self.labels[patient_id]
        if patient_id in self.noise_ids:
            return NOISE
        raise UnknownPatient(f"patient '{patient_id}' is not in the assignment")

    def members(self, cluster_id: int) -> Tuple[str, ...]:
        return self._members.get(cluster_id, ())

    def sizes(self) -> Dict[int, int]:
        return {c: len(ids) for c, ids in sorted(self._members.items())}

    def to_frame(self, order: Optional[Sequence[str]] = None) -> pd.DataFrame:
        ids = list(order) if order is not None else self.patient_ids
        return pd.DataFrame(
            {"patient_id": ids, "cluster_id": [self.cluster_id(pid) for pid in ids]}
        )


def cluster_of(
    assignment: ClusterAssignment,
    patient_id: str,
    pool: Optional[Iterable[str]] = None,
) -> Tuple[str, ...]:
    """Candidate neighbors of a patient: its cluster mates, ascending by id.

    Args:
        assignment: Cluster assignment covering the patient.
        patient_id: Patient whose candidates are wanted.
        pool: Patients eligible as candidates (the training split). Noise patients
            fall back to the whole pool, or to every assigned patient without one.

    Raises:
        UnknownPatient: If the patient is not in the assignment.
    """
    cluster_id = assignment.cluster_id(patient_id)
    eligible = set(pool) if pool is not None else None

    if cluster_id == NOISE:
        base: Iterable[str] = eligible if eligible is not None else assignment.patient_ids
        return tuple(sorted(pid for pid in base if pid != patient_id))

    mates = assignment.members(cluster_id)
    return tuple(
        pid for pid in mates if pid != patient_id and (eligible is None or pid in eligible)
    )


def write_assignment_csv(
    assignment: ClusterAssignment, path: Union[str, Path], order: Optional[Sequence[str]] = None
) -> Path:
    path = Path(path)
    assignment.to_frame(order).to_csv(path, index=False)
    logger.info(f"Wrote {assignment.n_clusters} clusters ({len(assignment.noise_ids)} noise) to {path}")
    return path


def read_assignment_csv(
    path: Union[str, Path], algorithm: Union[ClusterAlgorithm, str], params: Optional[Dict[str, Any]] = None
) -> ClusterAssignment:
    frame = pd.read_csv(path, dtype={"patient_id": str})
    return ClusterAssignment.from_array(
        algorithm, params or {}, list(frame["patient_id"]), frame["cluster_id"].tolist()
    )
