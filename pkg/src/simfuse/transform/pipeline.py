"""Cohort-level static transform: fit on train, apply to every record."""

import json
import logging
from pathlib import Path
from typing import Optional, Tuple, Union

from ..cohort.models import LABEL_NAMES, Cohort, FeatureKind, PatientRecord, StaticFeature
from ..errors import InvalidParameter
from .awoe import DEFAULT_EPSILON, DEFAULT_Q, DEFAULT_UNIQUE_THRESHOLD, apply_awoe, fit_awoe
from .models import FittedTransform, TransformMethod
from .zscore import apply_zscore, fit_zscore

logger = logging.getLogger(__name__)


def fit_transform(
    cohort: Cohort,
    method: Union[TransformMethod, str],
    target: str,
    epsilon: float = DEFAULT_EPSILON,
    unique_threshold: int = DEFAULT_UNIQUE_THRESHOLD,
    q: int = DEFAULT_Q,
) -> Tuple[Cohort, FittedTransform]:
    """Fit the transform on the training split and apply it to all records.

    The target label is dropped from the static schema whatever the method, so
    clustering never sees the label being predicted. Test records are transformed
    with parameters fitted on training records only.

    Args:
        cohort: Split cohort.
        method: 'awoe', 'zscore' or 'none'.
        target: Label being predicted.
        epsilon, unique_threshold, q: aWOE settings.

    Returns:
        Tuple of (transformed cohort, fitted parameters).

    Raises:
        InvalidParameter: If the cohort has no split or the target is unknown.
        NoPositiveEvents, NoNegativeEvents, DegenerateFeature: From fitting.
    """
    method = TransformMethod(method)
    if cohort.split is None:
        raise InvalidParameter("transform requires a split cohort")
    if target not in LABEL_NAMES:
        raise InvalidParameter(f"unknown target '{target}', expected one of {LABEL_NAMES}")

    features = tuple(name for name in cohort.schema if name != target)
    fitted = FittedTransform(method=method, target=target, features=features)

    if method is TransformMethod.AWOE:
        for name in features:
            fitted.awoe[name] = fit_awoe(cohort, name, target, epsilon, unique_threshold, q)
    elif method is TransformMethod.ZSCORE:
        for name in features:
            fitted.zscore[name] = fit_zscore(cohort, name)

    records = []
    for record in cohort.records:
        statics = []
        for feature in record.statics:
            if feature.name == target:
                continue
            statics.append(_transform_feature(fitted, feature))
        records.append(PatientRecord(record.patient_id, tuple(statics), record.labels, record.series))

    logger.info(f"Applied {method.value} transform for target '{target}' on {len(features)} features")
    return cohort.with_records(records, schema=features), fitted


def _transform_feature(fitted: FittedTransform, feature: StaticFeature) -> StaticFeature:
    if fitted.method is TransformMethod.AWOE:
        value = apply_awoe(fitted.awoe[feature.name], feature.value)
    elif fitted.method is TransformMethod.ZSCORE:
        value = apply_zscore(fitted.zscore[feature.name], feature.value)
    else:
        return feature
    return StaticFeature(feature.name, FeatureKind.NUMERIC, value)


def transform_cohort(
    cohort: Cohort,
    method: Union[TransformMethod, str],
    target: str,
    epsilon: float = DEFAULT_EPSILON,
    unique_threshold: int = DEFAULT_UNIQUE_THRESHOLD,
    q: int = DEFAULT_Q,
) -> Cohort:
    transformed, _ = fit_transform(cohort, method, target, epsilon, unique_threshold, q)
    return transformed


def write_transform_params(fitted: FittedTransform, run_dir: Union[str, Path]) -> Optional[Path]:
    """Write binning.json (aWOE) or zscore.json; nothing for the identity transform."""
    name = fitted.param_file_name()
    if name is None:
        return None
    path = Path(run_dir) / name
    with open(path, "w", encoding="utf-8") as f:
        json.dump(fitted.to_dict(), f, indent=2)
    logger.info(f"Wrote transform parameters to {path}")
    return path
