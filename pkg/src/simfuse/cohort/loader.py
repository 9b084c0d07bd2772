"""Reading and writing cohorts in the static.csv + series/<variate>.csv layout."""

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Tuple, Union

import numpy as np
import pandas as pd

from ..errors import (
    DuplicatePatientId,
    InvalidValue,
    MissingColumn,
    NonBinaryLabel,
    NonMonotoneTimestamps,
)
from .models import (
    BINARY_FEATURES,
    LABEL_NAMES,
    STATIC_COLUMNS,
    Cohort,
    PatientRecord,
    StaticFeature,
    TimeSeries,
    feature_kind,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SERIES_COLUMNS = ("patient_id", "timestamp_s", "value")
STATIC_FILE = "static.csv"
SERIES_DIR = "series"


def _read_csv(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise FileNotFoundError(f"Cohort file {path} does not exist.")
    return pd.read_csv(path, dtype={"patient_id": str}, float_precision="round_trip")


def _require_columns(frame: pd.DataFrame, columns: Iterable[str], path: Path) -> None:
    for column in columns:
        if column not in frame.columns:
            raise MissingColumn(f"missing column '{column}'", path=str(path))


def _csv_line(index: int) -> int:
    # header is line 1
    return int(index) + 2


def _load_statics(static_path: Path) -> List[Tuple[str, Tuple[StaticFeature, ...], Dict[str, int]]]:
    frame = _read_csv(static_path)
    _require_columns(frame, ("patient_id",) + STATIC_COLUMNS, static_path)

    rows = []
    seen = set()
    for index, row in frame.iterrows():
        line = _csv_line(index)
        patient_id = str(row["patient_id"])
        if patient_id in seen:
            raise DuplicatePatientId(
                f"duplicate patient_id '{patient_id}'", path=str(static_path), row=line
            )
        seen.add(patient_id)

        statics = []
        for name in STATIC_COLUMNS:
            value = float(row[name])
            if not np.isfinite(value):
                raise InvalidValue(
                    f"column '{name}' is not a finite number", path=str(static_path), row=line
                )
            if name in BINARY_FEATURES and value not in (0.0, 1.0):
                raise NonBinaryLabel(
                    f"column '{name}' must be 0 or 1, got {row[name]}",
                    path=str(static_path),
                    row=line,
                )
            statics.append(StaticFeature(name, feature_kind(name), value))

        labels = {name: int(row[name]) for name in LABEL_NAMES}
        rows.append((patient_id, tuple(statics), labels))
    return rows


def _load_variate(path: Path, known_ids: set) -> Dict[str, TimeSeries]:
    variate_id = path.stem
    frame = _read_csv(path)
    _require_columns(frame, SERIES_COLUMNS, path)

    for column in ("timestamp_s", "value"):
        finite = np.isfinite(frame[column].to_numpy(dtype=np.float64))
        if not finite.all():
            bad = int(np.flatnonzero(~finite)[0])
            raise InvalidValue(
                f"column '{column}' is not a finite number", path=str(path), row=_csv_line(bad)
            )

    steps = frame.groupby("patient_id", sort=False)["timestamp_s"].diff()
    regressions = np.flatnonzero((steps <= 0).to_numpy())
    if regressions.size:
        bad = int(regressions[0])
        raise NonMonotoneTimestamps(
            f"timestamps for patient '{frame['patient_id'].iloc[bad]}' do not increase",
            path=str(path),
            row=_csv_line(bad),
        )

    series: Dict[str, TimeSeries] = {}
    skipped = 0
    for patient_id, group in frame.groupby("patient_id", sort=False):
        if patient_id not in known_ids:
            skipped += 1
            continue
        series[patient_id] = TimeSeries(
            variate_id,
            group["timestamp_s"].to_numpy(dtype=np.float64),
            group["value"].to_numpy(dtype=np.float64),
        )
    if skipped:
        logger.warning(f"{path.name}: skipped {skipped} patients absent from the static file")
    return series


def load_cohort(static_path: PathLike, series_dir: PathLike) -> Cohort:
    """Load a cohort from a static CSV and a directory of per-variate series CSVs.

    Args:
        static_path: Path to static.csv.
        series_dir: Directory holding one <variate_id>.csv per variate.

    Returns:
        Cohort without a split.

    Raises:
        MissingColumn, NonBinaryLabel, NonMonotoneTimestamps, DuplicatePatientId,
        InvalidValue: naming the offending file and CSV line.
    """
    static_path = Path(static_path)
    series_dir = Path(series_dir)

    statics = _load_statics(static_path)
    known_ids = {patient_id for patient_id, _, _ in statics}

    per_patient: Dict[str, Dict[str, TimeSeries]] = {pid: {} for pid in known_ids}
    if not series_dir.is_dir():
        raise FileNotFoundError(f"Series directory {series_dir} does not exist.")
    variate_files = sorted(series_dir.glob("*.csv"))
    for path in variate_files:
        for patient_id, ts in _load_variate(path, known_ids).items():
            per_patient[patient_id][ts.variate_id] = ts

    records = [
        PatientRecord(pid, feats, labels, per_patient[pid]) for pid, feats, labels in statics
    ]
    cohort = Cohort(schema=STATIC_COLUMNS, records=tuple(records))
    n_series = sum(len(r.series) for r in records)
    logger.info(
        f"Loaded cohort: {len(records)} patients, {len(variate_files)} variates, "
        f"{n_series} series from {static_path.parent}"
    )
    return cohort


def load_cohort_dir(cohort_dir: PathLike) -> Cohort:
    """Load a cohort from a directory laid out as static.csv + series/."""
    cohort_dir = Path(cohort_dir)
    return load_cohort(cohort_dir / STATIC_FILE, cohort_dir / SERIES_DIR)


def write_cohort(cohort: Cohort, out_dir: PathLike) -> Tuple[Path, Path]:
    """Write a cohort as static.csv and series/<variate_id>.csv under out_dir.

    Only the columns of the static file layout are written; a cohort whose schema
    was reduced by a transform cannot be written back.
    """
    out_dir = Path(out_dir)
    series_dir = out_dir / SERIES_DIR
    series_dir.mkdir(parents=True, exist_ok=True)

    static_rows = []
    for record in cohort.records:
        row: Dict[str, object] = {"patient_id": record.patient_id}
        for name in STATIC_COLUMNS:
            value = record.static_value(name)
            row[name] = int(value) if name in BINARY_FEATURES else value
        static_rows.append(row)
    static_frame = pd.DataFrame(static_rows, columns=("patient_id",) + STATIC_COLUMNS)
    static_path = out_dir / STATIC_FILE
    static_frame.to_csv(static_path, index=False)

    for variate_id in cohort.variates:
        patient_ids, timestamps, values = [], [], []
        for record in cohort.records:
            ts = record.series.get(variate_id)
            if ts is None:
                continue
            patient_ids.extend([record.patient_id] * len(ts))
            timestamps.append(ts.timestamps)
            values.append(ts.values)
        frame = pd.DataFrame(
            {
                "patient_id": patient_ids,
                "timestamp_s": np.concatenate(timestamps),
                "value": np.concatenate(values),
            }
        )
        frame.to_csv(series_dir / f"{variate_id}.csv", index=False)

    logger.info(f"Wrote cohort of {len(cohort)} patients to {out_dir}")
    return static_path, series_dir
