"""Z-score standardization with training-only statistics."""

import logging

import numpy as np

from ..cohort.models import Cohort
from ..errors import DegenerateFeature, InvalidParameter
from .awoe import train_ids
from .models import ZScoreParams

logger = logging.getLogger(__name__)


def fit_zscore_values(feature: str, values: np.ndarray) -> ZScoreParams:
    """Mean and population standard deviation (divisor N) of the training values."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        raise InvalidParameter(f"feature '{feature}': need >= 2 training values, got {values.size}")
    mean = float(np.mean(values))
    std = float(np.std(values))
    if std == 0.0:
        raise DegenerateFeature(f"feature '{feature}' is constant on the training split")
    return ZScoreParams(feature, mean, std)


def fit_zscore(train: Cohort, feature: str) -> ZScoreParams:
    ids = train_ids(train)
    values = np.array([train.record(pid).static_value(feature) for pid in ids])
    return fit_zscore_values(feature, values)


def apply_zscore(params: ZScoreParams, value: float) -> float:
    if params.degenerate:
        raise DegenerateFeature(f"feature '{params.feature}' has zero standard deviation")
    return (value - params.mean) / params.std
