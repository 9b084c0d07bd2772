"""Job manifest and task descriptors of the distance engine."""

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, model_validator

from ..dtw.kernel import DtwConfig
from ..errors import InvalidParameter


class TaskStatus(str, Enum):
    PENDING = "pending"
    ASSIGNED = "assigned"
    DONE = "done"
    FAILED = "failed"


@dataclass(frozen=True)
class TaskSpec:
    """One (variate, target block) unit of work."""
    task_id: int
    variate_id: str
    target_ids: Tuple[str, ...]
    candidate_ids: Tuple[Tuple[str, ...], ...]  # one sorted list per target
    digest: str  # hash of task config + cohort fingerprint

    def pairs(self) -> set:
        return {(t, c) for t, cands in zip(self.target_ids, self.candidate_ids) for c in cands}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "task_id": self.task_id,
            "variate_id": self.variate_id,
            "target_ids": list(self.target_ids),
            "candidate_ids": [list(c) for c in self.candidate_ids],
            "digest": self.digest,
        }

    @classmethod
    def from_record(cls, record: "_TaskRecord") -> "TaskSpec":
        return cls(
            task_id=record.task_id,
            variate_id=record.variate_id,
            target_ids=tuple(record.target_ids),
            candidate_ids=tuple(tuple(c) for c in record.candidate_ids),
            digest=record.digest,
        )


class _TaskRecord(BaseModel):
    task_id: int = Field(ge=0)
    variate_id: str
    target_ids: List[str]
    candidate_ids: List[List[str]]
    digest: str

    @model_validator(mode="after")
    def _one_candidate_list_per_target(self) -> "_TaskRecord":
        if len(self.candidate_ids) != len(self.target_ids):
            raise ValueError("candidate_ids must hold one list per target")
        return self


class _DtwRecord(BaseModel):
    band: Optional[int] = Field(default=None, ge=0)
    final_sqrt: bool = True


class _ManifestRecord(BaseModel):
    """Shape of job.json."""
    job_id: str
    fingerprint: str
    dtw: _DtwRecord = Field(default_factory=_DtwRecord)
    observation_hours: Optional[float] = Field(default=None, gt=0)
    variates: List[str]
    tasks: List[_TaskRecord]

    @model_validator(mode="after")
    def _ids_are_positions(self) -> "_ManifestRecord":
        for position, task in enumerate(self.tasks):
            if task.task_id != position:
                raise ValueError(f"task at position {position} has task_id {task.task_id}")
        return self


@dataclass
class TaskState:
    status: TaskStatus = TaskStatus.PENDING
    worker: Optional[str] = None
    deadline: Optional[float] = None  # monotonic clock
    attempts: int = 0


@dataclass(frozen=True)
class JobManifest:
    """Everything a coordinator needs to shard and merge one distance job."""
    job_id: str
    fingerprint: str  # content hash of the raw cohort
    dtw: DtwConfig
    observation_hours: Optional[float]
    variates: Tuple[str, ...]
    tasks: Tuple[TaskSpec, ...]

    @property
    def task_config(self) -> Dict[str, Any]:
        """Settings shipped with every task; workers derive the digest from these."""
        return {
            "band": self.dtw.band,
            "final_sqrt": self.dtw.final_sqrt,
            "observation_hours": self.observation_hours,
        }

    def task(self, task_id: int) -> TaskSpec:
        return self.tasks[task_id]

    def tasks_for(self, variate_id: str) -> List[TaskSpec]:
        return [spec for spec in self.tasks if spec.variate_id == variate_id]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "job_id": self.job_id,
            "fingerprint": self.fingerprint,
            "dtw": self.dtw.to_dict(),
            "observation_hours": self.observation_hours,
            "variates": list(self.variates),
            "tasks": [spec.to_dict() for spec in self.tasks],
        }

    @classmethod
    def from_dict(cls, data: Any) -> "JobManifest":
        """Validate a decoded job.json.

        Raises:
            InvalidParameter: Naming the first field that does not fit.
        """
        try:
            record = _ManifestRecord.model_validate(data)
        except ValidationError as e:
            first = e.errors()[0]
            where = ".".join(str(p) for p in first["loc"]) or "manifest"
            raise InvalidParameter(f"malformed job manifest: {where}: {first['msg']}") from None
        return cls(
            job_id=record.job_id,
            fingerprint=record.fingerprint,
            dtw=DtwConfig(band=record.dtw.band, final_sqrt=record.dtw.final_sqrt),
            observation_hours=record.observation_hours,
            variates=tuple(record.variates),
            tasks=tuple(TaskSpec.from_record(t) for t in record.tasks),
        )

    def write_json(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f)
        return path

    @classmethod
    def read_json(cls, path: Union[str, Path]) -> "JobManifest":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except OSError as e:
            raise InvalidParameter(f"cannot read job manifest {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise InvalidParameter(f"job manifest {path} is not valid JSON: {e}") from e
        return cls.from_dict(data)
