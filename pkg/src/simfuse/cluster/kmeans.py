"""K-means with k-means++ seeding and Lloyd iterations."""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import InvalidParameter
from .models import ClusterAlgorithm, ClusterAssignment, as_points, default_ids, relabel_contiguous

logger = logging.getLogger(__name__)


def _squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _assign(points: np.ndarray, centroids: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    d2 = _squared_distances(points, centroids)
    labels = np.argmin(d2, axis=1)  # first minimum: lowest centroid index wins ties
    return labels, d2[np.arange(points.shape[0]), labels]


def _seed_centroids(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    closest = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = float(closest.sum())
        if total > 0.0:
            nxt = int(rng.choice(n, p=closest / total))
        else:
            # every point coincides with a chosen centroid
            taken = set(chosen)
            nxt = next(i for i in range(n) if i not in taken)
        chosen.append(nxt)
        closest = np.minimum(closest, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[chosen].copy()


def lloyd(
    points: np.ndarray, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-6
) -> Tuple[np.ndarray, np.ndarray, List[float], int]:
    """Run k-means on a validated matrix.

    Returns:
        Tuple of (labels, centroids, inertia after every assignment step, iterations).
    """
    rng = np.random.default_rng(seed)
    centroids = _seed_centroids(points, k, rng)
    history: List[float] = []

    iterations = 0
    for iterations in range(1, max_iter + 1):
        labels, d2 = _assign(points, centroids)
        history.append(float(d2.sum()))

        updated = centroids.copy()
        residual = d2.copy()
        for c in range(k):
            mask = labels == c
            if mask.any():
                updated[c] = points[mask].mean(axis=0)
            else:
                far = int(np.argmax(residual))
                updated[c] = points[far]
                residual[far] = 0.0
        shift = float(np.max(np.linalg.norm(updated - centroids, axis=1)))
        centroids = updated
        if shift < tol:
            break

    labels, d2 = _assign(points, centroids)
    history.append(float(d2.sum()))
    return labels, centroids, history, iterations


def kmeans(
    points,
    k: int,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-6,
    ids: Optional[Sequence[str]] = None,
) -> ClusterAssignment:
    """Partition points into k clusters minimizing within-cluster squared distance.

    Args:
        points: N x d matrix (a 1-D array is read as N x 1).
        k: Number of clusters, 1 <= k <= N.
        seed: Seed of the k-means++ initialization.
        max_iter: Iteration cap.
        tol: Stop once no centroid moves by tol or more.
        ids: Patient ids of the rows; defaults to "0".."N-1".

    Returns:
        ClusterAssignment whose diagnostics hold `centroids` (indexed by the
        returned cluster ids), `inertia_history` and `iterations`.

    Raises:
        EmptyInput: If there are no points.
        InvalidParameter: If k is out of range.
    """
    matrix = as_points(points)
    n = matrix.shape[0]
    ids = default_ids(n, ids)
    if not 1 <= k <= n:
        raise InvalidParameter(f"k must be in 1..{n}, got {k}")

    labels, centroids, history, iterations = lloyd(matrix, k, seed, max_iter, tol)
    contiguous, mapping = relabel_contiguous(labels)
    ordered = np.empty((len(mapping), matrix.shape[1]))
    for old, new in mapping.items():
        ordered[new] = centroids[old]

    logger.debug(f"k-means k={k}: {iterations} iterations, inertia {history[-1]:.6g}")
    return ClusterAssignment.from_array(
        ClusterAlgorithm.KMEANS,
        {"k": k, "seed": seed, "max_iter": max_iter, "tol": tol},
        ids,
        contiguous,
        diagnostics={"centroids": ordered, "inertia_history": history, "iterations": iterations},
    )
