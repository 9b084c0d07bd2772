"""OPTICS ordering with DBSCAN-equivalent cluster extraction."""

import logging
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import InvalidParameter
from .models import NOISE, ClusterAlgorithm, ClusterAssignment, as_points, default_ids

logger = logging.getLogger(__name__)

DEFAULT_MIN_SAMPLES = 5
DEFAULT_EPS_PERCENTILE = 90.0


class OpticsOrdering(NamedTuple):
    ordering: np.ndarray
    reachability: np.ndarray  # inf for points that start a new component
    core_distances: np.ndarray  # inf when fewer than min_samples points exist


def compute_ordering(distances: np.ndarray, min_samples: int) -> OpticsOrdering:
    """OPTICS over a full distance matrix with an unbounded generating radius.

    The core distance counts the point itself, so it is the distance to the
    (min_samples - 1)-th other point. The next point processed is always the
    unprocessed one with the smallest reachability, lowest index on ties.
    """
    n = distances.shape[0]
    if n >= min_samples:
        core = np.partition(distances, min_samples - 1, axis=1)[:, min_samples - 1]
    else:
        core = np.full(n, np.inf)

    reach = np.full(n, np.inf)
    processed = np.zeros(n, dtype=bool)
    ordering = np.empty(n, dtype=np.int64)

    for step in range(n):
        remaining = np.flatnonzero(~processed)
        point = int(remaining[np.argmin(reach[remaining])])
        processed[point] = True
        ordering[step] = point
        if np.isfinite(core[point]):
            remaining = np.flatnonzero(~processed)
            candidate = np.maximum(core[point], distances[point, remaining])
            reach[remaining] = np.minimum(reach[remaining], candidate)

    return OpticsOrdering(ordering, reach, core)


def extract_clusters(
    result: OpticsOrdering, distances: np.ndarray, eps: float
) -> np.ndarray:
    """Label points by cutting the reachability plot at eps.

    A point whose reachability exceeds eps starts a cluster when it is a core
    point at eps and is noise otherwise. Non-core points left as noise but within
    eps of a core point join the cluster of the nearest such core point.
    """
    labels = np.full(result.ordering.size, NOISE, dtype=np.int64)
    current = NOISE
    for point in result.ordering:
        if result.reachability[point] > eps:
            if result.core_distances[point] <= eps:
                current += 1
                labels[point] = current
        else:
            labels[point] = current

    is_core = result.core_distances <= eps
    for point in np.flatnonzero((labels == NOISE) & ~is_core):
        near = np.flatnonzero(is_core & (distances[point] <= eps))
        if near.size:
            labels[point] = labels[near[np.argmin(distances[point, near])]]
    return labels


def default_eps(reachability: np.ndarray) -> float:
    finite = reachability[np.isfinite(reachability)]
    if finite.size == 0:
        return 0.0
    return float(np.percentile(finite, DEFAULT_EPS_PERCENTILE))


def optics(
    points,
    min_samples: int = DEFAULT_MIN_SAMPLES,
    eps_extract: Optional[float] = None,
    ids: Optional[Sequence[str]] = None,
) -> ClusterAssignment:
    """Density-based clustering; unreached points become noise.

    Args:
        points: N x d matrix.
        min_samples: Neighborhood size (point included) that makes a core point.
        eps_extract: Reachability threshold; defaults to the 90th percentile of
            the finite reachability values.
        ids: Patient ids of the rows.

    Raises:
        EmptyInput, InvalidParameter
    """
    matrix = as_points(points)
    ids = default_ids(matrix.shape[0], ids)
    if min_samples < 2:
        raise InvalidParameter(f"min_samples must be >= 2, got {min_samples}")
    if eps_extract is not None and eps_extract < 0:
        raise InvalidParameter(f"eps_extract must be >= 0, got {eps_extract}")

    distances = cdist(matrix, matrix)
    result = compute_ordering(distances, min_samples)
    eps = default_eps(result.reachability) if eps_extract is None else float(eps_extract)
    labels = extract_clusters(result, distances, eps)

    n_noise = int(np.sum(labels == NOISE))
    logger.debug(f"OPTICS: eps={eps:.4g}, {labels.max() + 1} clusters, {n_noise} noise points")
    return ClusterAssignment.from_array(
        ClusterAlgorithm.OPTICS,
        {"min_samples": min_samples, "eps_extract": eps},
        ids,
        labels,
        diagnostics={
            "ordering": result.ordering,
            "reachability": result.reachability,
            "core_distances": result.core_distances,
        },
    )
