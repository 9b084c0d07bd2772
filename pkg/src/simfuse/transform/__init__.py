"""Static feature transforms applied before clustering: aWOE and Z-score."""

from .models import AwoeBinning, BinningMode, FittedTransform, TransformMethod, ZScoreParams
from .awoe import apply_awoe, apply_awoe_array, fit_awoe, fit_awoe_values
from .zscore import apply_zscore, fit_zscore, fit_zscore_values
from .pipeline import fit_transform, transform_cohort, write_transform_params

__all__ = [
    # Data models
    'AwoeBinning',
    'BinningMode',
    'FittedTransform',
    'TransformMethod',
    'ZScoreParams',

    # aWOE
    'fit_awoe',
    'fit_awoe_values',
    'apply_awoe',
    'apply_awoe_array',

    # Z-score
    'fit_zscore',
    'fit_zscore_values',
    'apply_zscore',

    # Cohort level
    'fit_transform',
    'transform_cohort',
    'write_transform_params',
]
