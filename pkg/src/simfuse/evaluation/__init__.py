"""Evaluation metrics and run reports."""

from .metrics import (
    METRIC_NAMES,
    ClassificationMetrics,
    ConfusionCounts,
    auc,
    confusion,
    metrics,
    relative_improvement,
)
from .report import (
    LEDGER_COLUMNS,
    EvalReport,
    RunDescriptor,
    append_ledger,
    evaluate_frame,
    evaluate_run,
    read_predictions_csv,
    write_report_json,
)

__all__ = [
    # Metrics
    'METRIC_NAMES',
    'ClassificationMetrics',
    'ConfusionCounts',
    'auc',
    'confusion',
    'metrics',
    'relative_improvement',

    # Reports
    'LEDGER_COLUMNS',
    'EvalReport',
    'RunDescriptor',
    'append_ledger',
    'evaluate_frame',
    'evaluate_run',
    'read_predictions_csv',
    'write_report_json',
]
