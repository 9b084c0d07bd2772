"""Predictions for every target patient and their CSV form."""

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Mapping, Optional, Sequence, Union

import pandas as pd

from ..dtw.blocks import VariateDistanceBlock
from .neighborhood import DEFAULT_LAMBDA, fuse, predict

logger = logging.getLogger(__name__)

PREDICTION_COLUMNS = (
    "patient_id",
    "target",
    "predicted",
    "score",
    "true_label",
    "votes_pos",
    "votes_neg",
)


@dataclass(frozen=True)
class Prediction:
    patient_id: str
    target: str  # label name, cad or chf
    predicted: int
    score: float  # positive-vote fraction
    true_label: Optional[int]
    votes_pos: int
    votes_neg: int


def predict_targets(
    blocks: Sequence[VariateDistanceBlock],
    target_ids: Sequence[str],
    train_labels: Mapping[str, int],
    target: str,
    lam: int = DEFAULT_LAMBDA,
    truth: Optional[Mapping[str, int]] = None,
) -> List[Prediction]:
    """Fuse and vote for each target, in the given order."""
    predictions = []
    no_votes = 0
    for patient_id in target_ids:
        fusion = fuse(blocks, patient_id, lam, train_labels)
        predicted, score = predict(fusion, train_labels)
        if fusion.total_votes == 0:
            no_votes += 1
        predictions.append(
            Prediction(
                patient_id=patient_id,
                target=target,
                predicted=predicted,
                score=score,
                true_label=None if truth is None else int(truth[patient_id]),
                votes_pos=fusion.votes_pos,
                votes_neg=fusion.votes_neg,
            )
        )
    if no_votes:
        logger.warning(f"{no_votes}/{len(target_ids)} targets had no usable neighbor, used the prior")
    logger.info(f"Predicted '{target}' for {len(predictions)} targets (lambda={lam})")
    return predictions


def predictions_frame(predictions: Sequence[Prediction]) -> pd.DataFrame:
    frame = pd.DataFrame([asdict(p) for p in predictions], columns=list(PREDICTION_COLUMNS))
    frame["true_label"] = frame["true_label"].astype("Int64")
    return frame


def write_predictions_csv(predictions: Sequence[Prediction], path: Union[str, Path]) -> Path:
    path = Path(path)
    predictions_frame(predictions).to_csv(path, index=False, float_format="%.17g")
    return path
