"""Confusion counts, threshold metrics and rank-based AUC."""

from dataclasses import asdict, dataclass
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from ..errors import InvalidParameter, LengthMismatch, SingleClassInput

METRIC_NAMES = ("auc", "accuracy", "specificity", "precision", "recall", "f_measure")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise InvalidParameter(f"confusion counts must be non-negative: {self}")

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def transpose(self) -> "ConfusionCounts":
        """Counts with the roles of the two labels swapped."""
        return ConfusionCounts(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)


@dataclass(frozen=True)
class ClassificationMetrics:
    accuracy: float
    specificity: float
    precision: float
    recall: float
    f_measure: float
    degenerate: Tuple[str, ...] = ()  # metrics whose denominator was 0

    def as_dict(self) -> Dict[str, float]:
        values = asdict(self)
        values.pop("degenerate")
        return values


def _binary(values: Sequence[int], name: str) -> np.ndarray:
    array = np.asarray(values)
    if array.ndim != 1:
        raise InvalidParameter(f"{name} must be one-dimensional")
    if not np.isin(array, (0, 1)).all():
        raise InvalidParameter(f"{name} must contain only 0 and 1")
    return array.astype(np.int64)


def confusion(preds: Sequence[int], truth: Sequence[int]) -> ConfusionCounts:
    """Counts with label 1 as the positive class.

    Raises:
        LengthMismatch: If preds and truth differ in length.
        InvalidParameter: If they are empty or not binary.
    """
    if len(preds) != len(truth):
        raise LengthMismatch(f"{len(preds)} predictions for {len(truth)} labels")
    if len(preds) == 0:
        raise InvalidParameter("cannot count an empty prediction set")
    p = _binary(preds, "preds")
    t = _binary(truth, "truth")
    return ConfusionCounts(
        tp=int(np.sum((p == 1) & (t == 1))),
        fp=int(np.sum((p == 1) & (t == 0))),
        fn=int(np.sum((p == 0) & (t == 1))),
        tn=int(np.sum((p == 0) & (t == 0))),
    )


def metrics(c: ConfusionCounts) -> ClassificationMetrics:
    """Accuracy, specificity, precision, recall and F-measure.

    A ratio with a zero denominator is reported as 0 and named in `degenerate`.
    """
    degenerate = []

    def ratio(num: int, den: int, name: str) -> float:
        if den == 0:
            degenerate.append(name)
            return 0.0
        return num / den

    accuracy = ratio(c.tp + c.tn, c.n, "accuracy")
    specificity = ratio(c.tn, c.fp + c.tn, "specificity")
    precision = ratio(c.tp, c.tp + c.fp, "precision")
    recall = ratio(c.tp, c.fn + c.tp, "recall")
    if precision + recall == 0:
        degenerate.append("f_measure")
        f_measure = 0.0
    else:
        f_measure = (2 * precision * recall) / (precision + recall)
    return ClassificationMetrics(
        accuracy=accuracy,
        specificity=specificity,
        precision=precision,
        recall=recall,
        f_measure=f_measure,
        degenerate=tuple(degenerate),
    )


def auc(scores: Sequence[float], truth: Sequence[int]) -> float:
    """Area under the ROC curve as the Mann-Whitney statistic.

    Tied scores between a positive and a negative count one half, which equals
    trapezoidal integration of the ROC curve.

    Raises:
        LengthMismatch: If scores and truth differ in length.
        SingleClassInput: If truth lacks either class.
    """
    if len(scores) != len(truth):
        raise LengthMismatch(f"{len(scores)} scores for {len(truth)} labels")
    s = np.asarray(scores, dtype=np.float64)
    if not np.isfinite(s).all():
        raise InvalidParameter("scores must be finite")
    t = _binary(truth, "truth") if len(truth) else np.asarray([], dtype=np.int64)
    n_pos = int(t.sum())
    n_neg = len(t) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassInput(f"AUC needs both classes, got {n_pos} positive and {n_neg} negative")

    ranks = rankdata(s, method="average")
    u = ranks[t == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def relative_improvement(value: float, baseline: float) -> float:
    """Percent change of value over baseline; NaN when the baseline is 0."""
    if baseline == 0:
        return float("nan")
    return (value - baseline) / baseline * 100.0
