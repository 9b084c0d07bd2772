"""Line-delimited JSON messages exchanged between coordinator and workers.

One JSON object per line, UTF-8. Every object carries its kind in "t":
REGISTER (worker -> coordinator, first line of a session), TASK, RESULT, NACK
and DONE (coordinator -> worker, last line of a session).
"""

import asyncio
import json
import logging
from typing import Annotated, Any, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, TypeAdapter, ValidationError, model_validator

from ..errors import InvalidParameter, ProtocolError
from .models import TaskSpec

logger = logging.getLogger(__name__)

# RESULT lines for a full target block easily exceed asyncio's 64 KiB default
STREAM_LIMIT = 64 * 1024 * 1024

FINGERPRINT_MISMATCH = "fingerprint_mismatch"
PROTOCOL_ERROR = "protocol_error"
TASK_FAILED = "task_failed"


class TaskConfig(BaseModel):
    band: Optional[int] = None
    final_sqrt: bool = True
    observation_hours: Optional[float] = None


class RegisterMessage(BaseModel):
    t: Literal["REGISTER"] = "REGISTER"
    worker: str
    fingerprint: str


class TaskMessage(BaseModel):
    t: Literal["TASK"] = "TASK"
    task_id: int
    variate: str
    targets: List[str]
    digest: str
    candidates: List[List[str]]
    config: TaskConfig = Field(default_factory=TaskConfig)

    @model_validator(mode="after")
    def _one_candidate_list_per_target(self) -> "TaskMessage":
        if len(self.candidates) != len(self.targets):
            raise ValueError("candidates must hold one list per target")
        return self

    def to_spec(self) -> TaskSpec:
        return TaskSpec(
            task_id=self.task_id,
            variate_id=self.variate,
            target_ids=tuple(self.targets),
            candidate_ids=tuple(tuple(c) for c in self.candidates),
            digest=self.digest,
        )

    @classmethod
    def from_spec(cls, spec: TaskSpec, config: dict) -> "TaskMessage":
        return cls(
            task_id=spec.task_id,
            variate=spec.variate_id,
            targets=list(spec.target_ids),
            digest=spec.digest,
            candidates=[list(c) for c in spec.candidate_ids],
            config=TaskConfig(**config),
        )


class ResultMessage(BaseModel):
    t: Literal["RESULT"] = "RESULT"
    task_id: int
    rows: List[Tuple[str, str, float]]


class NackMessage(BaseModel):
    t: Literal["NACK"] = "NACK"
    task_id: Optional[int] = None
    reason: str


class DoneMessage(BaseModel):
    t: Literal["DONE"] = "DONE"


Message = Annotated[
    Union[RegisterMessage, TaskMessage, ResultMessage, NackMessage, DoneMessage],
    Field(discriminator="t"),
]
_message_adapter: TypeAdapter = TypeAdapter(Message)


def encode(message: BaseModel) -> bytes:
    """Serialize a message as one JSON line; floats keep their shortest repr."""
    payload = json.dumps(message.model_dump(mode="json"), separators=(",", ":"))
    return (payload + "\n").encode("utf-8")


def decode(line: Union[bytes, str]) -> Any:
    """Parse one line into a message model.

    Raises:
        ProtocolError: If the line is not JSON or not a known message.
    """
    try:
        payload = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ProtocolError(f"bad_json: {e}") from e
    try:
        return _message_adapter.validate_python(payload)
    except ValidationError as e:
        first = e.errors()[0]
        raise ProtocolError(f"invalid message: {first.get('loc')} {first.get('msg')}") from e


async def send(writer: asyncio.StreamWriter, message: BaseModel) -> None:
    writer.write(encode(message))
    await writer.drain()


def parse_endpoint(endpoint: str) -> Tuple[str, int]:
    """Split "HOST:PORT" into its parts."""
    host, sep, port = endpoint.rpartition(":")
    if not sep or not host:
        raise InvalidParameter(f"endpoint must be HOST:PORT, got '{endpoint}'")
    try:
        number = int(port)
    except ValueError:
        raise InvalidParameter(f"endpoint port must be an integer, got '{port}'") from None
    if not 0 <= number <= 65535:
        raise InvalidParameter(f"endpoint port out of range: {number}")
    return host, number


def parse_endpoints(endpoints: Union[str, List[str]]) -> List[Tuple[str, int]]:
    if isinstance(endpoints, str):
        endpoints = [e for e in endpoints.split(",") if e.strip()]
    return [parse_endpoint(e.strip()) for e in endpoints]
