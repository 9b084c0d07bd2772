"""Spectral clustering on an RBF affinity graph."""

import logging
from typing import Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

from ..errors import EigendecompositionFailure, InvalidParameter
from .kmeans import lloyd
from .models import ClusterAlgorithm, ClusterAssignment, as_points, default_ids

logger = logging.getLogger(__name__)


def spectral_embedding(matrix: np.ndarray, k: int, gamma: float) -> np.ndarray:
    """Row-normalized k smallest eigenvectors of the symmetric normalized Laplacian."""
    affinity = np.exp(-gamma * cdist(matrix, matrix, "sqeuclidean"))
    inv_sqrt_degree = 1.0 / np.sqrt(affinity.sum(axis=1))
    laplacian = np.eye(matrix.shape[0]) - (
        inv_sqrt_degree[:, None] * affinity * inv_sqrt_degree[None, :]
    )
    laplacian = 0.5 * (laplacian + laplacian.T)

    try:
        _, vectors = linalg.eigh(laplacian, subset_by_index=[0, k - 1])
    except (linalg.LinAlgError, ValueError) as e:
        logger.error(f"Eigendecomposition failed: {e}")
        raise EigendecompositionFailure(str(e)) from e
    if not np.all(np.isfinite(vectors)):
        raise EigendecompositionFailure("eigenvectors contain non-finite values")

    norms = np.linalg.norm(vectors, axis=1)
    norms[norms == 0.0] = 1.0
    return vectors / norms[:, None]


def spectral(
    points,
    k: int,
    gamma: Optional[float] = None,
    seed: int = 0,
    ids: Optional[Sequence[str]] = None,
) -> ClusterAssignment:
    """Graph-partition clustering.

    Args:
        points: N x d matrix.
        k: Number of clusters, 2 <= k <= N.
        gamma: RBF width; defaults to 1 / d.
        seed: Seed of the k-means step on the embedding.
        ids: Patient ids of the rows.

    Raises:
        EmptyInput, InvalidParameter, EigendecompositionFailure
    """
    matrix = as_points(points)
    n, d = matrix.shape
    ids = default_ids(n, ids)
    if not 2 <= k <= n:
        raise InvalidParameter(f"spectral clustering needs 2 <= k <= {n}, got {k}")
    gamma = 1.0 / d if gamma is None else float(gamma)
    if gamma <= 0:
        raise InvalidParameter(f"gamma must be positive, got {gamma}")

    embedding = spectral_embedding(matrix, k, gamma)
    labels, _, _, _ = lloyd(embedding, k, seed=seed)

    logger.debug(f"Spectral clustering: {n} points, k={k}, gamma={gamma:.4g}")
    return ClusterAssignment.from_array(
        ClusterAlgorithm.SPECTRAL, {"k": k, "gamma": gamma, "seed": seed}, ids, labels
    )
