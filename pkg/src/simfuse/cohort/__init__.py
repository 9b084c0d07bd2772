"""Cohort data model, CSV ingestion, splitting and synthetic generation."""

from .models import (
    BINARY_FEATURES,
    LABEL_NAMES,
    STATIC_COLUMNS,
    Cohort,
    CohortSplit,
    FeatureKind,
    PatientRecord,
    StaticFeature,
    TimeSeries,
    feature_kind,
)
from .loader import load_cohort, load_cohort_dir, write_cohort
from .operations import cohort_fingerprint, split_cohort, truncate_observation_window
from .synthetic import VARIATE_CATALOG, generate_synthetic_cohort

__all__ = [
    # Data models
    'BINARY_FEATURES',
    'LABEL_NAMES',
    'STATIC_COLUMNS',
    'Cohort',
    'CohortSplit',
    'FeatureKind',
    'PatientRecord',
    'StaticFeature',
    'TimeSeries',
    'feature_kind',

    # I/O
    'load_cohort',
    'load_cohort_dir',
    'write_cohort',

    # Operations
    'cohort_fingerprint',
    'split_cohort',
    'truncate_observation_window',
    'VARIATE_CATALOG',
    'generate_synthetic_cohort',
]
