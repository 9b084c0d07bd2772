"""Exception hierarchy for simfuse.

Every error raised on purpose by the library derives from SimfuseError so the
CLI can report it cleanly. Errors are grouped by the subpackage that raises them.
"""

from typing import Optional


class SimfuseError(Exception):
    """Base class for all simfuse errors."""


class InvalidParameter(SimfuseError, ValueError):
    """A parameter is outside its allowed range."""


# Cohort ingestion and construction

class CohortError(SimfuseError):
    """A cohort file or record violates the cohort data model."""

    def __init__(self, message: str, path: Optional[str] = None, row: Optional[int] = None):
        self.path = path
        self.row = row
        location = ""
        if path is not None:
            location = f" [{path}" + (f", row {row}" if row is not None else "") + "]"
        super().__init__(f"{message}{location}")


class MissingColumn(CohortError):
    pass


class NonBinaryLabel(CohortError):
    pass


class NonMonotoneTimestamps(CohortError):
    pass


class DuplicatePatientId(CohortError):
    pass


class InvalidValue(CohortError):
    """A numeric value is NaN or infinite."""


class CohortTooSmall(CohortError):
    pass


# Static feature transforms

class TransformError(SimfuseError):
    pass


class NoPositiveEvents(TransformError):
    pass


class NoNegativeEvents(TransformError):
    pass


class DegenerateFeature(TransformError):
    pass


# Clustering

class ClusteringError(SimfuseError):
    pass


class EmptyInput(ClusteringError):
    pass


class EigendecompositionFailure(ClusteringError):
    pass


class UnknownPatient(ClusteringError, KeyError):
    pass


# DTW kernel

class DtwError(SimfuseError):
    pass


class EmptySeries(DtwError):
    pass


class InfeasibleBand(DtwError):
    pass


class SeriesTooLong(DtwError):
    pass


# Distributed engine

class EngineError(SimfuseError):
    pass


class EmptyJob(EngineError):
    pass


class NoWorkersAvailable(EngineError):
    pass


class JobIncomplete(EngineError):
    pass


class FingerprintMismatch(EngineError):
    pass


class ProtocolError(EngineError):
    pass


# Fusion

class UnknownTarget(SimfuseError, KeyError):
    pass


# Evaluation

class EvaluationError(SimfuseError):
    pass


class LengthMismatch(EvaluationError):
    pass


class SingleClassInput(EvaluationError):
    pass


class MalformedPredictions(EvaluationError):
    pass


# Pipeline

class PipelineStageError(SimfuseError):
    """Wraps the first hard error of a pipeline run with the stage it came from."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
