"""Evaluation of a predictions file into a report row and the results ledger."""

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import pandas as pd

from ..errors import MalformedPredictions
from ..fusion.predictions import PREDICTION_COLUMNS
from .metrics import ClassificationMetrics, ConfusionCounts, auc, confusion, metrics

logger = logging.getLogger(__name__)

LEDGER_COLUMNS = (
    "target",
    "dt_method",
    "clustering",
    "k_clusters",
    "lambda",
    "auc",
    "accuracy",
    "specificity",
    "precision",
    "recall",
    "f_measure",
    "n_test",
    "wall_clock_s",
)


@dataclass(frozen=True)
class RunDescriptor:
    """The configuration a report row is filed under."""
    target: str
    dt_method: str
    clustering: str
    k_clusters: int
    lam: int = 1


@dataclass(frozen=True)
class EvalReport:
    descriptor: RunDescriptor
    counts: ConfusionCounts
    metrics: ClassificationMetrics
    auc: float
    auc_degenerate: bool  # truth held a single class
    wall_clock_s: float = 0.0

    @property
    def n_test(self) -> int:
        return self.counts.n

    def metric_values(self) -> Dict[str, float]:
        return {"auc": self.auc, **self.metrics.as_dict()}

    def ledger_row(self) -> Dict[str, Any]:
        d = self.descriptor
        return {
            "target": d.target,
            "dt_method": d.dt_method,
            "clustering": d.clustering,
            "k_clusters": d.k_clusters,
            "lambda": d.lam,
            **self.metric_values(),
            "n_test": self.n_test,
            "wall_clock_s": self.wall_clock_s,
        }

    def to_dict(self) -> Dict[str, Any]:
        degenerate = list(self.metrics.degenerate)
        if self.auc_degenerate:
            degenerate.insert(0, "auc")
        return {
            "descriptor": asdict(self.descriptor),
            "counts": asdict(self.counts),
            "metrics": self.metric_values(),
            "degenerate": degenerate,
            "n_test": self.n_test,
            "wall_clock_s": self.wall_clock_s,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EvalReport":
        values = dict(data["metrics"])
        degenerate = tuple(data.get("degenerate", ()))
        auc_value = values.pop("auc")
        return cls(
            descriptor=RunDescriptor(**data["descriptor"]),
            counts=ConfusionCounts(**data["counts"]),
            metrics=ClassificationMetrics(
                **values, degenerate=tuple(m for m in degenerate if m != "auc")
            ),
            auc=auc_value,
            auc_degenerate="auc" in degenerate,
            wall_clock_s=float(data.get("wall_clock_s", 0.0)),
        )


def read_predictions_csv(path: Union[str, Path]) -> pd.DataFrame:
    """Load and validate a predictions file.

    Raises:
        MalformedPredictions: If the file is missing, lacks columns, or holds
            values outside their domain.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype={"patient_id": str, "target": str})
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise MalformedPredictions(f"cannot read {path}: {e}") from e

    missing = [c for c in PREDICTION_COLUMNS if c not in frame.columns]
    if missing:
        raise MalformedPredictions(f"{path} lacks columns {missing}")
    if frame.empty:
        raise MalformedPredictions(f"{path} holds no predictions")
    if frame["patient_id"].duplicated().any():
        raise MalformedPredictions(f"{path} repeats a patient_id")
    for column in ("predicted", "true_label"):
        if frame[column].isna().any() or not frame[column].isin((0, 1)).all():
            raise MalformedPredictions(f"{path}: column '{column}' must be 0 or 1 in every row")
    score = pd.to_numeric(frame["score"], errors="coerce")
    if score.isna().any() or ((score < 0) | (score > 1)).any():
        raise MalformedPredictions(f"{path}: scores must lie in [0, 1]")
    frame["score"] = score
    return frame


def evaluate_frame(frame: pd.DataFrame, descriptor: RunDescriptor, wall_clock_s: float = 0.0) -> EvalReport:
    targets = set(frame["target"])
    if targets != {descriptor.target}:
        raise MalformedPredictions(f"predictions are for {sorted(targets)}, report is for '{descriptor.target}'")
    preds = frame["predicted"].astype(int).tolist()
    truth = frame["true_label"].astype(int).tolist()
    counts = confusion(preds, truth)
    values = metrics(counts)
    if len(set(truth)) < 2:
        logger.warning(f"Test labels for '{descriptor.target}' hold a single class, AUC reported as 0")
        auc_value, auc_degenerate = 0.0, True
    else:
        auc_value, auc_degenerate = auc(frame["score"].tolist(), truth), False
    return EvalReport(descriptor, counts, values, auc_value, auc_degenerate, wall_clock_s)


def append_ledger(report: EvalReport, ledger_path: Union[str, Path]) -> Path:
    """Append one row to the results ledger, writing the header on first use."""
    ledger_path = Path(ledger_path)
    ledger_path.parent.mkdir(parents=True, exist_ok=True)
    write_header = not ledger_path.exists() or ledger_path.stat().st_size == 0
    pd.DataFrame([report.ledger_row()], columns=list(LEDGER_COLUMNS)).to_csv(
        ledger_path, mode="a", header=write_header, index=False
    )
    return ledger_path


def write_report_json(report: EvalReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2)
    return path


def evaluate_run(
    predictions_csv: Union[str, Path],
    descriptor: RunDescriptor,
    ledger_path: Optional[Union[str, Path]] = None,
    wall_clock_s: float = 0.0,
) -> EvalReport:
    """Score a predictions file and optionally file it in the ledger.

    Args:
        predictions_csv: File written by the fusion stage.
        descriptor: Configuration the row is filed under.
        ledger_path: Results ledger to append to; skipped when None.
        wall_clock_s: Run time recorded with the row.

    Returns:
        The report; every metric lies in [0, 1].

    Raises:
        MalformedPredictions: If the predictions file is not usable.
    """
    frame = read_predictions_csv(predictions_csv)
    report = evaluate_frame(frame, descriptor, wall_clock_s)
    m = report.metrics
    logger.info(
        f"{descriptor.target}/{descriptor.dt_method}/{descriptor.clustering}: "
        f"AUC={report.auc:.3f} F={m.f_measure:.3f} acc={m.accuracy:.3f} (n={report.n_test})"
    )
    if ledger_path is not None:
        append_ledger(report, ledger_path)
        logger.info(f"Appended report row to {ledger_path}")
    return report
