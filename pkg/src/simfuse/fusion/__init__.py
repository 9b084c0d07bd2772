"""Neighborhood similarity fusion and majority-vote prediction."""

from .neighborhood import (
    DEFAULT_LAMBDA,
    NeighborhoodFusion,
    fuse,
    nearest_neighbors,
    predict,
    training_positive_rate,
)
from .predictions import (
    PREDICTION_COLUMNS,
    Prediction,
    predict_targets,
    predictions_frame,
    write_predictions_csv,
)

__all__ = [
    # Fusion
    'DEFAULT_LAMBDA',
    'NeighborhoodFusion',
    'fuse',
    'nearest_neighbors',
    'predict',
    'training_positive_rate',

    # Predictions
    'PREDICTION_COLUMNS',
    'Prediction',
    'predict_targets',
    'predictions_frame',
    'write_predictions_csv',
]
