"""Bottom-up hierarchical clustering with Ward linkage."""

import logging
from typing import Optional, Sequence

import numpy as np
from scipy.cluster.hierarchy import linkage

from ..errors import InvalidParameter
from .models import ClusterAlgorithm, ClusterAssignment, as_points, default_ids

logger = logging.getLogger(__name__)


def _cut(merges: np.ndarray, n: int, k: int) -> np.ndarray:
    """Apply the first n - k merges of a linkage matrix and label the leaves by root."""
    parent = list(range(2 * n - 1))
    for step in range(n - k):
        a, b = int(merges[step, 0]), int(merges[step, 1])
        parent[a] = parent[b] = n + step

    def root(node: int) -> int:
        while parent[node] != node:
            node = parent[node]
        return node

    return np.array([root(leaf) for leaf in range(n)], dtype=np.int64)


def agglomerative(points, k: int, ids: Optional[Sequence[str]] = None) -> ClusterAssignment:
    """Ward agglomerative clustering stopped at k clusters.

    Raises:
        EmptyInput: If there are no points.
        InvalidParameter: If k is outside 1..N.
    """
    matrix = as_points(points)
    n = matrix.shape[0]
    ids = default_ids(n, ids)
    if not 1 <= k <= n:
        raise InvalidParameter(f"k must be in 1..{n}, got {k}")

    if k == n:
        raw = np.arange(n)
    else:
        merges = linkage(matrix, method="ward", metric="euclidean")
        raw = _cut(merges, n, k)

    logger.debug(f"Agglomerative clustering: {n} points into {k} clusters")
    return ClusterAssignment.from_array(ClusterAlgorithm.AGGLOMERATIVE, {"k": k}, ids, raw)
