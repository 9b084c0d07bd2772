"""Shared fixtures: temporary directories, small cohorts and in-thread TCP workers."""

import asyncio
import shutil
import tempfile
import threading
from typing import Dict, List, Optional, Sequence

import pytest

from src.simfuse.cohort.models import (
    STATIC_COLUMNS,
    Cohort,
    PatientRecord,
    StaticFeature,
    TimeSeries,
    feature_kind,
)
from src.simfuse.distengine.protocol import STREAM_LIMIT, ResultMessage, send
from src.simfuse.distengine.worker import WorkerService


def make_record(
    patient_id: str,
    cad: int = 0,
    chf: int = 0,
    series: Optional[Dict[str, Sequence[float]]] = None,
    age: float = 60.0,
    weight: float = 80.0,
    height: float = 170.0,
    gender: int = 0,
    admission_type: int = 0,
) -> PatientRecord:
    """Build a record; each series gets hourly timestamps starting at 0."""
    values = {
        "age": age,
        "weight": weight,
        "height": height,
        "gender": gender,
        "admission_type": admission_type,
        "cad": cad,
        "chf": chf,
    }
    statics = tuple(StaticFeature(n, feature_kind(n), float(values[n])) for n in STATIC_COLUMNS)
    built = {}
    for variate_id, samples in (series or {}).items():
        stamps = [3600.0 * i for i in range(len(samples))]
        built[variate_id] = TimeSeries(variate_id, stamps, samples)
    return PatientRecord(patient_id, statics, {"cad": cad, "chf": chf}, built)


def make_cohort(records: List[PatientRecord]) -> Cohort:
    return Cohort(schema=STATIC_COLUMNS, records=tuple(records))


@pytest.fixture
def temp_dir():
    """Create a temporary directory for testing."""
    temp_path = tempfile.mkdtemp()
    yield temp_path
    shutil.rmtree(temp_path, ignore_errors=True)


class ThreadedWorker:
    """A WorkerService listening on 127.0.0.1 from its own event loop thread."""

    def __init__(self, service: WorkerService):
        self.service = service
        self.loop = asyncio.new_event_loop()
        self.server = None
        self.port = None
        self._ready = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def _run(self):
        asyncio.set_event_loop(self.loop)

        async def start():
            self.server = await asyncio.start_server(
                self.service.handle_connection, "127.0.0.1", 0, limit=STREAM_LIMIT
            )
            self.port = self.server.sockets[0].getsockname()[1]
            self._ready.set()

        self.loop.run_until_complete(start())
        self.loop.run_forever()

    @property
    def endpoint(self) -> str:
        return f"127.0.0.1:{self.port}"

    def start(self) -> "ThreadedWorker":
        self._thread.start()
        assert self._ready.wait(timeout=10), "worker did not start"
        return self

    def stop(self):
        def shutdown():
            self.server.close()
            self.loop.stop()

        self.loop.call_soon_threadsafe(shutdown)
        self._thread.join(timeout=10)


class CrashingWorker(WorkerService):
    """Drops the connection instead of answering the given task ids."""

    def __init__(self, cohort: Cohort, crash_on: Sequence[int], name: Optional[str] = None):
        super().__init__(cohort, name)
        self.crash_on = set(crash_on)
        self.crashed = 0

    async def respond(self, message):
        if message.task_id in self.crash_on:
            self.crashed += 1
            raise ConnectionResetError(f"simulated crash on task {message.task_id}")
        return await super().respond(message)


class StalledWorker(WorkerService):
    """Registers and accepts tasks but never answers the given task ids."""

    def __init__(self, cohort: Cohort, stall_on: Sequence[int], name: Optional[str] = None):
        super().__init__(cohort, name)
        self.stall_on = set(stall_on)
        self.stalled = 0

    async def respond(self, message):
        if message.task_id in self.stall_on:
            self.stalled += 1
            await asyncio.sleep(3600)
        return await super().respond(message)


class DuplicatingWorker(WorkerService):
    """Answers every task, then sends a second RESULT for it with distorted distances."""

    def __init__(self, cohort: Cohort, name: Optional[str] = None):
        super().__init__(cohort, name)
        self.duplicates_sent = 0
        self._writer: Optional[asyncio.StreamWriter] = None

    async def handle_connection(self, reader, writer):
        self._writer = writer
        await super().handle_connection(reader, writer)

    async def respond(self, message):
        reply = await super().respond(message)
        if not isinstance(reply, ResultMessage):
            return reply
        await send(self._writer, reply)
        self.duplicates_sent += 1
        return ResultMessage(task_id=reply.task_id, rows=[(t, c, d + 1000.0) for t, c, d in reply.rows])


@pytest.fixture
def start_worker():
    """Start in-thread workers; every one is stopped after the test."""
    started: List[ThreadedWorker] = []

    def _start(service: WorkerService) -> ThreadedWorker:
        worker = ThreadedWorker(service).start()
        started.append(worker)
        return worker

    yield _start
    for worker in started:
        worker.stop()
