"""Static-feature clustering that gates the DTW candidate set."""

from .models import (
    NOISE,
    ClusterAlgorithm,
    ClusterAssignment,
    cluster_of,
    read_assignment_csv,
    write_assignment_csv,
)
from .kmeans import kmeans
from .agglomerative import agglomerative
from .spectral import spectral
from .optics import optics
from .dispatch import assign_clusters

__all__ = [
    # Data models
    'NOISE',
    'ClusterAlgorithm',
    'ClusterAssignment',
    'cluster_of',
    'read_assignment_csv',
    'write_assignment_csv',

    # Algorithms
    'kmeans',
    'agglomerative',
    'spectral',
    'optics',
    'assign_clusters',
]
