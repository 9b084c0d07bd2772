"""Cohort data model: static features, time series, patient records."""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import (
    DuplicatePatientId,
    InvalidParameter,
    InvalidValue,
    NonBinaryLabel,
    NonMonotoneTimestamps,
)

# Column layout of static.csv after patient_id
STATIC_COLUMNS: Tuple[str, ...] = (
    "age",
    "weight",
    "height",
    "gender",
    "admission_type",
    "cad",
    "chf",
)
BINARY_FEATURES = frozenset({"gender", "admission_type", "cad", "chf"})
LABEL_NAMES: Tuple[str, ...] = ("cad", "chf")


class FeatureKind(str, Enum):
    NUMERIC = "numeric"
    BINARY = "categorical-binary"


def feature_kind(name: str) -> FeatureKind:
    return FeatureKind.BINARY if name in BINARY_FEATURES else FeatureKind.NUMERIC


@dataclass(frozen=True)
class StaticFeature:
    """One static (non time-varying) attribute of a patient."""
    name: str
    kind: FeatureKind
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise InvalidValue(f"static feature '{self.name}' is not finite: {self.value}")
        if self.kind is FeatureKind.BINARY and self.value not in (0.0, 1.0):
            raise NonBinaryLabel(f"binary feature '{self.name}' has value {self.value}")


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Samples of one variate for one patient, timestamps in seconds since admission."""
    variate_id: str
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        timestamps = np.array(self.timestamps, dtype=np.float64)
        values = np.array(self.values, dtype=np.float64)
        if timestamps.ndim != 1 or timestamps.shape != values.shape:
            raise InvalidParameter(
                f"series '{self.variate_id}': timestamps and values must be 1-D of equal length"
            )
        if timestamps.size == 0:
            raise InvalidParameter(f"series '{self.variate_id}' has no samples")
        if not (np.all(np.isfinite(timestamps)) and np.all(np.isfinite(values))):
            raise InvalidValue(f"series '{self.variate_id}' contains non-finite samples")
        if timestamps.size > 1 and not np.all(np.diff(timestamps) > 0):
            raise NonMonotoneTimestamps(
                f"series '{self.variate_id}' timestamps are not strictly increasing"
            )
        timestamps.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "timestamps", timestamps)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.variate_id == other.variate_id
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None  # type: ignore[assignment]

    def until(self, cutoff_s: float) -> Optional["TimeSeries"]:
        """Prefix of samples with timestamp <= cutoff_s, or None when nothing remains."""
        keep = int(np.searchsorted(self.timestamps, cutoff_s, side="right"))
        if keep == 0:
            return None
        if keep == self.timestamps.size:
            return self
        return TimeSeries(self.variate_id, self.timestamps[:keep], self.values[:keep])


@dataclass(frozen=True)
class PatientRecord:
    """One admission: statics in schema order, both labels, and present variates."""
    patient_id: str
    statics: Tuple[StaticFeature, ...]
    labels: Mapping[str, int]  # label name -> 0/1
    series: Mapping[str, TimeSeries] = field(default_factory=dict)  # variate_id -> series

    def __post_init__(self):
        for name in LABEL_NAMES:
            if name not in self.labels:
                raise InvalidParameter(f"patient {self.patient_id} lacks label '{name}'")
            if self.labels[name] not in (0, 1):
                raise NonBinaryLabel(
                    f"patient {self.patient_id} label '{name}' = {self.labels[name]}"
                )

    def static_value(self, name: str) -> float:
        for feature in self.statics:
            if feature.name == name:
                return feature.value
        raise KeyError(name)

    def has_variate(self, variate_id: str) -> bool:
        return variate_id in self.series


@dataclass(frozen=True)
class CohortSplit:
    """Disjoint train/test partition of patient ids."""
    train_ids: Tuple[str, ...]
    test_ids: Tuple[str, ...]


@dataclass(frozen=True)
class Cohort:
    """A set of patient records sharing one static schema."""
    schema: Tuple[str, ...]
    records: Tuple[PatientRecord, ...]
    split: Optional[CohortSplit] = None
    _by_id: Dict[str, PatientRecord] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self):
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "records", tuple(self.records))
        index: Dict[str, PatientRecord] = {}
        for row, record in enumerate(self.records):
            if record.patient_id in index:
                raise DuplicatePatientId(
                    f"duplicate patient_id '{record.patient_id}'", row=row + 1
                )
            names = tuple(feature.name for feature in record.statics)
            if names != self.schema:
                raise InvalidParameter(
                    f"patient {record.patient_id} statics {names} do not match schema {self.schema}"
                )
            index[record.patient_id] = record
        object.__setattr__(self, "_by_id", index)

        if self.split is not None:
            train, test = set(self.split.train_ids), set(self.split.test_ids)
            if train & test:
                raise InvalidParameter("train and test ids overlap")
            if train | test != set(index) or len(train) + len(test) != len(index):
                raise InvalidParameter("split is not an exhaustive partition of the cohort")

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, patient_id: str) -> bool:
        return patient_id in self._by_id

    @property
    def patient_ids(self) -> Tuple[str, ...]:
        return tuple(record.patient_id for record in self.records)

    @property
    def variates(self) -> List[str]:
        """Sorted union of variate ids present in any record."""
        present = set()
        for record in self.records:
            present.update(record.series)
        return sorted(present)

    def record(self, patient_id: str) -> PatientRecord:
        return self._by_id[patient_id]

    def with_split(self, split: Optional[CohortSplit]) -> "Cohort":
        return replace(self, split=split)

    def with_records(
        self, records: Iterable[PatientRecord], schema: Optional[Sequence[str]] = None
    ) -> "Cohort":
        return Cohort(
            schema=tuple(schema) if schema is not None else self.schema,
            records=tuple(records),
            split=self.split,
        )

    def labels(self, label: str, ids: Optional[Iterable[str]] = None) -> Dict[str, int]:
        chosen = self.patient_ids if ids is None else ids
        return {pid: self._by_id[pid].labels[label] for pid in chosen}

    def static_matrix(self, ids: Optional[Sequence[str]] = None) -> np.ndarray:
        """Static values as an (N, len(schema)) float matrix in the given id order."""
        chosen = self.patient_ids if ids is None else ids
        if not chosen:
            return np.zeros((0, len(self.schema)), dtype=np.float64)
        return np.array(
            [[feature.value for feature in self._by_id[pid].statics] for pid in chosen],
            dtype=np.float64,
        )
