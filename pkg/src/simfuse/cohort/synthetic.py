"""Seeded synthetic cohort with planted class signal.

Stands in for the restricted ICU extraction: same static columns, hourly sampled
chart items, and two latent classes that differ in static profile and in series
dynamics (mean shift and oscillation period).
"""

import logging
from typing import NamedTuple, Tuple

import numpy as np

from ..errors import InvalidParameter
from .models import STATIC_COLUMNS, Cohort, PatientRecord, StaticFeature, TimeSeries, feature_kind

logger = logging.getLogger(__name__)


class VariateSpec(NamedTuple):
    item_id: str
    description: str
    baseline: float
    scale: float


VARIATE_CATALOG: Tuple[VariateSpec, ...] = (
    VariateSpec("220045", "Heart Rate", 85.0, 12.0),
    VariateSpec("220210", "Respiratory Rate", 18.0, 4.0),
    VariateSpec("220052", "Arterial Blood Pressure mean", 80.0, 10.0),
    VariateSpec("1529", "Glucose", 130.0, 35.0),
    VariateSpec("220050", "Arterial Blood Pressure systolic", 120.0, 15.0),
    VariateSpec("220051", "Arterial Blood Pressure diastolic", 60.0, 10.0),
    VariateSpec("223761", "Body Temperature", 98.6, 1.0),
    VariateSpec("223834", "O2 Flow", 3.0, 1.5),
    VariateSpec("220047", "Heart Rate Alarm Low", 50.0, 5.0),
    VariateSpec("224161", "Resp Alarm High", 35.0, 5.0),
    VariateSpec("220074", "Central venous pressure", 10.0, 4.0),
    VariateSpec("224687", "Minute volume", 9.0, 2.5),
    VariateSpec("224688", "Respiratory Rate (Set)", 14.0, 3.0),
    VariateSpec("224695", "Peak insp. Pressure", 22.0, 5.0),
    VariateSpec("224697", "Mean Airway Pressure", 10.0, 3.0),
    VariateSpec("220059", "Pulmonary artery pressure systolic", 35.0, 8.0),
    VariateSpec("220060", "Pulmonary artery pressure diastolic", 15.0, 5.0),
    VariateSpec("220061", "Pulmonary artery pressure mean", 25.0, 6.0),
)

BASE_PERIOD_HOURS = 24.0


def generate_synthetic_cohort(
    n: int,
    variates: int = 4,
    series_len: int = 100,
    signal_strength: float = 1.0,
    seed: int = 0,
    missing_rate: float = 0.0,
    prevalence: float = 0.5,
) -> Cohort:
    """Generate a cohort whose labels are recoverable from statics and series.

    The `cad` label is the latent class. `chf` agrees with it with probability
    0.5 + 0.4 * tanh(signal_strength), so it carries class information as a
    static feature when predicting `cad`. With signal_strength = 0 every feature
    and series is independent of both labels.

    Args:
        n: Number of patients (>= 2).
        variates: Number of chart items to generate (1..18).
        series_len: Hourly samples per series (>= 2).
        signal_strength: Class separation (>= 0).
        seed: RNG seed; the output is a pure function of all arguments.
        missing_rate: Fraction of (patient, variate) series dropped, in [0, 1).
        prevalence: Share of latent class 1, in (0, 1).

    Returns:
        Cohort without a split.

    Raises:
        InvalidParameter: If any argument is out of range.
    """
    if n < 2:
        raise InvalidParameter(f"n must be >= 2, got {n}")
    if not 1 <= variates <= len(VARIATE_CATALOG):
        raise InvalidParameter(f"variates must be in 1..{len(VARIATE_CATALOG)}, got {variates}")
    if series_len < 2:
        raise InvalidParameter(f"series_len must be >= 2, got {series_len}")
    if signal_strength < 0:
        raise InvalidParameter(f"signal_strength must be >= 0, got {signal_strength}")
    if not 0.0 <= missing_rate < 1.0:
        raise InvalidParameter(f"missing_rate must be in [0, 1), got {missing_rate}")
    if not 0.0 < prevalence < 1.0:
        raise InvalidParameter(f"prevalence must be in (0, 1), got {prevalence}")

    rng = np.random.default_rng(seed)
    s = float(signal_strength)
    agreement = float(np.tanh(s))

    latent = (rng.random(n) < prevalence).astype(np.int64)
    sign = 2 * latent - 1

    statics = {
        "age": np.clip(rng.normal(62.0 + 4.0 * s * latent, 12.0), 18.0, 95.0).round(1),
        "weight": np.clip(rng.normal(80.0 + 4.0 * s * latent, 15.0), 40.0, 180.0).round(1),
        "height": np.clip(rng.normal(170.0, 10.0, n), 140.0, 210.0).round(1),
        "gender": (rng.random(n) < 0.5 + 0.1 * agreement * sign).astype(np.int64),
        "admission_type": (rng.random(n) < 0.5 + 0.2 * agreement * sign).astype(np.int64),
        "cad": latent,
        "chf": (rng.random(n) < 0.5 + 0.4 * agreement * sign).astype(np.int64),
    }

    hours = np.arange(series_len, dtype=np.float64)
    period = np.where(latent == 1, BASE_PERIOD_HOURS / (1.0 + 0.25 * s), BASE_PERIOD_HOURS)
    shift = 0.2 * s * latent

    series_by_patient = [dict() for _ in range(n)]
    for spec in VARIATE_CATALOG[:variates]:
        offsets = rng.random(n)
        phases = rng.uniform(0.0, 2.0 * np.pi, n)
        noise = rng.normal(0.0, 1.0, (n, series_len))
        present = rng.random(n) >= missing_rate

        t_hours = offsets[:, None] + hours[None, :]
        z = (
            shift[:, None]
            + np.sin(2.0 * np.pi * t_hours / period[:, None] + phases[:, None])
            + noise
        )
        values = (spec.baseline + spec.scale * z).round(3)
        timestamps = (t_hours * 3600.0).round(0)

        for i in np.flatnonzero(present):
            series_by_patient[i][spec.item_id] = TimeSeries(
                spec.item_id, timestamps[i], values[i]
            )

    records = []
    for i in range(n):
        features = tuple(
            StaticFeature(name, feature_kind(name), float(statics[name][i]))
            for name in STATIC_COLUMNS
        )
        labels = {"cad": int(statics["cad"][i]), "chf": int(statics["chf"][i])}
        records.append(PatientRecord(f"P{i:05d}", features, labels, series_by_patient[i]))

    logger.info(
        f"Generated synthetic cohort: n={n}, variates={variates}, len={series_len}, "
        f"signal={s}, missing_rate={missing_rate}, seed={seed}"
    )
    return Cohort(schema=STATIC_COLUMNS, records=tuple(records))
