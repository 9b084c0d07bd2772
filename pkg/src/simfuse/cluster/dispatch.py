"""Run the configured clustering algorithm on a patient feature matrix."""

import logging
from typing import Optional, Sequence, Union

from .agglomerative import agglomerative
from .kmeans import kmeans
from .models import ClusterAlgorithm, ClusterAssignment, as_points
from .optics import DEFAULT_MIN_SAMPLES, optics
from .spectral import spectral

logger = logging.getLogger(__name__)


def assign_clusters(
    algorithm: Union[ClusterAlgorithm, str],
    points,
    ids: Sequence[str],
    k: int,
    seed: int = 0,
    gamma: Optional[float] = None,
    min_samples: int = DEFAULT_MIN_SAMPLES,
    eps_extract: Optional[float] = None,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> ClusterAssignment:
    algorithm = ClusterAlgorithm(algorithm)
    if algorithm is ClusterAlgorithm.KMEANS:
        assignment = kmeans(points, k, seed=seed, max_iter=max_iter, tol=tol, ids=ids)
    elif algorithm is ClusterAlgorithm.AGGLOMERATIVE:
        assignment = agglomerative(points, k, ids=ids)
    elif algorithm is ClusterAlgorithm.SPECTRAL:
        assignment = spectral(points, k, gamma=gamma, seed=seed, ids=ids)
    elif algorithm is ClusterAlgorithm.OPTICS:
        assignment = optics(points, min_samples=min_samples, eps_extract=eps_extract, ids=ids)
    else:
        as_points(points)
        assignment = ClusterAssignment.single(ids)

    sizes = assignment.sizes()
    logger.info(
        f"Clustered {len(ids)} patients with {algorithm.value}: "
        f"{assignment.n_clusters} clusters, {len(assignment.noise_ids)} noise, "
        f"largest {max(sizes.values()) if sizes else 0}"
    )
    return assignment
