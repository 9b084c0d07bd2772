"""Cohort operations: train/test split, observation window, content fingerprint."""

import hashlib
import logging

import numpy as np

from ..errors import CohortTooSmall, InvalidParameter
from .models import Cohort, CohortSplit, PatientRecord

logger = logging.getLogger(__name__)

SECONDS_PER_HOUR = 3600.0


def split_cohort(cohort: Cohort, test_fraction: float, seed: int) -> Cohort:
    """Uniform random train/test partition, reproducible for a fixed seed.

    Args:
        cohort: Cohort to split; any existing split is replaced.
        test_fraction: Share of patients in the test partition, in (0, 1).
        seed: Seed of the permutation.

    Returns:
        The same cohort carrying a CohortSplit. Both id lists keep cohort order.

    Raises:
        CohortTooSmall: If the cohort has fewer than 2 records.
        InvalidParameter: If test_fraction is outside (0, 1).
    """
    n = len(cohort)
    if n < 2:
        raise CohortTooSmall(f"cannot split a cohort of {n} record(s)")
    if not 0.0 < test_fraction < 1.0:
        raise InvalidParameter(f"test_fraction must be in (0, 1), got {test_fraction}")

    n_test = int(round(test_fraction * n))
    order = np.random.default_rng(seed).permutation(n)
    test_positions = set(int(i) for i in order[:n_test])

    ids = cohort.patient_ids
    train_ids = tuple(pid for i, pid in enumerate(ids) if i not in test_positions)
    test_ids = tuple(pid for i, pid in enumerate(ids) if i in test_positions)
    logger.info(f"Split cohort: {len(train_ids)} train / {len(test_ids)} test (seed={seed})")
    return cohort.with_split(CohortSplit(train_ids, test_ids))


def truncate_observation_window(cohort: Cohort, hours: float) -> Cohort:
    """Keep only samples observed within the first `hours` after admission.

    A variate with no sample left becomes absent for that patient.
    """
    if hours <= 0:
        raise InvalidParameter(f"observation window must be positive, got {hours}")
    cutoff = hours * SECONDS_PER_HOUR

    records = []
    dropped = 0
    for record in cohort.records:
        kept = {}
        for variate_id, ts in record.series.items():
            prefix = ts.until(cutoff)
            if prefix is None:
                dropped += 1
            else:
                kept[variate_id] = prefix
        records.append(PatientRecord(record.patient_id, record.statics, record.labels, kept))

    if dropped:
        logger.debug(f"Observation window {hours}h left {dropped} series empty")
    return cohort.with_records(records)


def cohort_fingerprint(cohort: Cohort) -> str:
    """Content hash over schema, statics, labels and series, independent of record order."""
    digest = hashlib.sha256()
    digest.update(repr(cohort.schema).encode())
    for record in sorted(cohort.records, key=lambda r: r.patient_id):
        digest.update(record.patient_id.encode())
        digest.update(np.array([f.value for f in record.statics], dtype="<f8").tobytes())
        digest.update(repr(sorted(record.labels.items())).encode())
        for variate_id in sorted(record.series):
            ts = record.series[variate_id]
            digest.update(variate_id.encode())
            digest.update(len(ts).to_bytes(8, "little"))
            digest.update(ts.timestamps.astype("<f8").tobytes())
            digest.update(ts.values.astype("<f8").tobytes())
    return digest.hexdigest()
