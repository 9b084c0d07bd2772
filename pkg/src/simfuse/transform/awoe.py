"""Adaptive Weight-of-Evidence binning.

A feature with few distinct training values gets one bin per value; otherwise the
training values are cut into floor(train_size / q) equal-frequency bins. Each bin
is replaced by ln((pos_b / POS + eps) / (neg_b / NEG + eps)).
"""

import logging
from typing import Sequence

import numpy as np

from ..cohort.models import Cohort
from ..errors import InvalidParameter, NoNegativeEvents, NoPositiveEvents
from .models import AwoeBinning, BinningMode

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-4
DEFAULT_UNIQUE_THRESHOLD = 100
DEFAULT_Q = 20


def train_ids(cohort: Cohort) -> Sequence[str]:
    """Training ids of the cohort, or every id when the cohort carries no split."""
    return cohort.split.train_ids if cohort.split is not None else cohort.patient_ids


def fit_awoe_values(
    feature: str,
    values: np.ndarray,
    labels: np.ndarray,
    epsilon: float = DEFAULT_EPSILON,
    unique_threshold: int = DEFAULT_UNIQUE_THRESHOLD,
    q: int = DEFAULT_Q,
) -> AwoeBinning:
    """Fit aWOE bins on raw training arrays.

    Raises:
        NoPositiveEvents: If no label is 1.
        NoNegativeEvents: If no label is 0.
        InvalidParameter: On empty input or non-positive epsilon/q.
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if values.size == 0 or values.shape != labels.shape:
        raise InvalidParameter(f"feature '{feature}': need equal-length non-empty values and labels")
    if epsilon <= 0 or q < 1 or unique_threshold < 1:
        raise InvalidParameter("epsilon must be > 0, q and unique_threshold >= 1")

    total_pos = int(np.sum(labels == 1))
    total_neg = int(np.sum(labels == 0))
    if total_pos == 0:
        raise NoPositiveEvents(f"feature '{feature}': no positive events in training data")
    if total_neg == 0:
        raise NoNegativeEvents(f"feature '{feature}': no negative events in training data")

    distinct = np.unique(values)
    if distinct.size <= unique_threshold:
        mode = BinningMode.PER_UNIQUE_VALUE
        edges = distinct
    else:
        mode = BinningMode.EQUAL_FREQUENCY
        n_bins = max(2, values.size // q)
        quantiles = np.quantile(values, np.linspace(0.0, 1.0, n_bins + 1))
        # tied quantiles collapse into one edge
        edges = np.unique(quantiles)

    draft = AwoeBinning(
        feature, mode, tuple(float(e) for e in edges), (), (), (), epsilon, unique_threshold, q
    )
    n_bins = edges.size if mode is BinningMode.PER_UNIQUE_VALUE else edges.size - 1
    bins = draft.bin_indices(values)

    pos = np.bincount(bins[labels == 1], minlength=n_bins)
    neg = np.bincount(bins[labels == 0], minlength=n_bins)
    awoe = np.log((pos / total_pos + epsilon) / (neg / total_neg + epsilon))

    logger.debug(f"aWOE '{feature}': {mode.value}, {n_bins} bins")
    return AwoeBinning(
        feature=feature,
        mode=mode,
        edges=draft.edges,
        bin_awoe=tuple(float(a) for a in awoe),
        pos_counts=tuple(int(p) for p in pos),
        neg_counts=tuple(int(n) for n in neg),
        epsilon=epsilon,
        unique_threshold=unique_threshold,
        q=q,
    )


def fit_awoe(
    train: Cohort,
    feature: str,
    target: str,
    epsilon: float = DEFAULT_EPSILON,
    unique_threshold: int = DEFAULT_UNIQUE_THRESHOLD,
    q: int = DEFAULT_Q,
) -> AwoeBinning:
    """Fit aWOE bins of one static feature on the training split of a cohort.

    Args:
        train: Cohort; only its training split is read (all records if unsplit).
        feature: Static feature name.
        target: Label name ('cad' or 'chf').
        epsilon: Smoothing added to both event shares.
        unique_threshold: Max distinct values for one-bin-per-value mode.
        q: Bin-size divisor of equal-frequency mode.

    Returns:
        The fitted AwoeBinning.
    """
    ids = train_ids(train)
    values = np.array([train.record(pid).static_value(feature) for pid in ids])
    labels = np.array([train.record(pid).labels[target] for pid in ids])
    return fit_awoe_values(feature, values, labels, epsilon, unique_threshold, q)


def apply_awoe(binning: AwoeBinning, value: float) -> float:
    return binning.bin_awoe[binning.bin_index(value)]


def apply_awoe_array(binning: AwoeBinning, values: np.ndarray) -> np.ndarray:
    return np.asarray(binning.bin_awoe, dtype=np.float64)[binning.bin_indices(values)]
