"""Coordinator of the distance engine: dispatch, deadlines, retries and merge.

Dispatch is at-least-once. A task whose worker misses its deadline or drops
the connection goes back to pending and may be handed to another worker; the
first RESULT for a task id wins and later ones are discarded, so the merged
output never depends on who computed what.
"""

import asyncio
import logging
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from ..cohort.loader import load_cohort_dir
from ..cohort.operations import cohort_fingerprint
from ..dtw.blocks import Row, VariateDistanceBlock
from ..errors import (
    FingerprintMismatch,
    InvalidParameter,
    JobIncomplete,
    NoWorkersAvailable,
    ProtocolError,
)
from .executor import merge_results
from .models import JobManifest, TaskState, TaskStatus
from .protocol import (
    FINGERPRINT_MISMATCH,
    STREAM_LIMIT,
    DoneMessage,
    NackMessage,
    RegisterMessage,
    ResultMessage,
    TaskMessage,
    decode,
    parse_endpoint,
    parse_endpoints,
    send,
)

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT_S = 60.0
DEFAULT_RETRIES = 3


class TaskTable:
    """Per-task state of one job. Only the coordinator's event loop touches it."""

    def __init__(
        self,
        manifest: JobManifest,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        retries: int = DEFAULT_RETRIES,
        clock: Callable[[], float] = time.monotonic,
    ):
        if timeout_s <= 0:
            raise InvalidParameter(f"timeout_s must be positive, got {timeout_s}")
        if retries < 0:
            raise InvalidParameter(f"retries must be >= 0, got {retries}")
        self.manifest = manifest
        self.timeout_s = timeout_s
        self.max_attempts = 1 + retries
        self.clock = clock
        self.states: Dict[int, TaskState] = {spec.task_id: TaskState() for spec in manifest.tasks}
        self.results: Dict[int, List[Row]] = {}
        self.duplicates = 0

    def claim(self, worker: str) -> Optional[int]:
        """Assign the lowest pending task id to worker, or None if nothing is pending."""
        self.expire_overdue()
        for spec in self.manifest.tasks:
            state = self.states[spec.task_id]
            if state.status is TaskStatus.PENDING:
                state.status = TaskStatus.ASSIGNED
                state.worker = worker
                state.deadline = self.clock() + self.timeout_s
                state.attempts += 1
                return spec.task_id
        return None

    def complete(self, task_id: int, rows: List[Row]) -> bool:
        """Record a result; False if the task already has one."""
        if task_id in self.results:
            self.duplicates += 1
            return False
        self.results[task_id] = rows
        state = self.states[task_id]
        state.status = TaskStatus.DONE
        state.worker = None
        state.deadline = None
        return True

    def release(self, task_id: int, worker: Optional[str] = None, count_attempt: bool = True) -> None:
        """Take an assigned task back; it fails once its attempts are used up."""
        state = self.states[task_id]
        if state.status is not TaskStatus.ASSIGNED:
            return
        if worker is not None and state.worker != worker:
            return
        if not count_attempt:
            state.attempts -= 1
        state.worker = None
        state.deadline = None
        if state.attempts >= self.max_attempts:
            state.status = TaskStatus.FAILED
            logger.error(f"Task {task_id} failed after {state.attempts} attempts")
        else:
            state.status = TaskStatus.PENDING

    def release_worker(self, worker: str) -> None:
        for task_id, state in self.states.items():
            if state.status is TaskStatus.ASSIGNED and state.worker == worker:
                logger.warning(f"Reassigning task {task_id} held by lost worker {worker}")
                self.release(task_id, worker)

    def expire_overdue(self) -> None:
        now = self.clock()
        for task_id, state in self.states.items():
            if state.status is TaskStatus.ASSIGNED and state.deadline is not None and state.deadline < now:
                logger.warning(f"Task {task_id} on {state.worker} missed its deadline, reassigning")
                self.release(task_id)

    @property
    def failed(self) -> List[int]:
        return [tid for tid, state in self.states.items() if state.status is TaskStatus.FAILED]

    @property
    def settled(self) -> bool:
        return len(self.results) == len(self.states) or bool(self.failed)


class Coordinator:
    """Runs one job over worker sessions, either dialing workers or accepting them."""

    def __init__(
        self,
        manifest: JobManifest,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        retries: int = DEFAULT_RETRIES,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.manifest = manifest
        self.table = TaskTable(manifest, timeout_s, retries, clock)
        self.timeout_s = timeout_s
        self.clock = clock
        self.poll_s = min(0.05, timeout_s / 4)
        self.config = manifest.task_config
        self._sessions = 0
        self._settled: Optional[asyncio.Event] = None

    async def _read_message(self, reader: asyncio.StreamReader):
        line = await reader.readline()
        if not line:
            raise ConnectionResetError("worker closed the connection")
        return decode(line)

    async def _session(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter, peer: str
    ) -> None:
        self._sessions += 1
        worker = f"{peer}#{self._sessions}"
        try:
            try:
                register = await asyncio.wait_for(self._read_message(reader), self.timeout_s)
            except (asyncio.TimeoutError, ProtocolError) as e:
                logger.warning(f"Worker at {peer} did not register: {e}")
                return
            if not isinstance(register, RegisterMessage):
                logger.warning(f"Worker at {peer} opened with {register.t}, dropping it")
                return
            worker = f"{register.worker}#{self._sessions}"
            if register.fingerprint != self.manifest.fingerprint:
                logger.warning(
                    f"Worker {worker} holds cohort {register.fingerprint[:12]}, "
                    f"job needs {self.manifest.fingerprint[:12]}; dropping it"
                )
                await send(writer, DoneMessage())
                return
            logger.info(f"Worker {worker} registered from {peer}")

            while True:
                task_id = self.table.claim(worker)
                if task_id is None:
                    if self.table.settled:
                        break
                    await asyncio.sleep(self.poll_s)
                    continue
                spec = self.manifest.task(task_id)
                await send(writer, TaskMessage.from_spec(spec, self.config))
                if not await self._await_reply(reader, worker, task_id):
                    return
            await send(writer, DoneMessage())
            logger.info(f"Worker {worker} released")
        except (ConnectionError, asyncio.IncompleteReadError) as e:
            logger.warning(f"Lost worker {worker}: {e}")
        finally:
            self.table.release_worker(worker)
            writer.close()
            try:
                await writer.wait_closed()
            except ConnectionError:
                pass
            if self._settled is not None and self.table.settled:
                self._settled.set()

    async def _await_reply(self, reader: asyncio.StreamReader, worker: str, task_id: int) -> bool:
        """Wait for the answer to task_id. False means the worker is lost.

        Returns True early once the job has settled or another worker answered
        task_id, so a stalled worker does not hold the session open.
        """
        give_up = self.clock() + self.timeout_s * self.table.max_attempts
        read = asyncio.ensure_future(reader.readline())
        try:
            while True:
                done, _ = await asyncio.wait({read}, timeout=self.poll_s)
                if not done:
                    self.table.expire_overdue()
                    if self.table.settled or task_id in self.table.results:
                        # answered elsewhere; a late reply is discarded as a duplicate
                        logger.debug(f"Task {task_id} no longer needs {worker}, moving on")
                        return True
                    if self.clock() > give_up:
                        logger.warning(f"Worker {worker} unresponsive on task {task_id}, dropping it")
                        return False
                    continue

                try:
                    line = read.result()
                except ValueError as e:
                    # over STREAM_LIMIT; the reader already dropped the line
                    logger.warning(f"Oversized reply from {worker}: {e}")
                    read = asyncio.ensure_future(reader.readline())
                    continue
                if not line:
                    raise ConnectionResetError("worker closed the connection")
                read = asyncio.ensure_future(reader.readline())
                try:
                    message = decode(line)
                except ProtocolError as e:
                    logger.warning(f"Malformed reply from {worker}: {e}")
                    continue

                if isinstance(message, ResultMessage):
                    self._accept_result(message, worker)
                    if message.task_id == task_id:
                        return True
                elif isinstance(message, NackMessage):
                    if message.reason == FINGERPRINT_MISMATCH:
                        logger.warning(f"Worker {worker} rejected task {task_id}: {message.reason}")
                        self.table.release(task_id, worker, count_attempt=False)
                        return False
                    logger.warning(f"Worker {worker} refused task {message.task_id}: {message.reason}")
                    self.table.release(task_id, worker)
                    return True
                else:
                    logger.warning(f"Ignoring unexpected {message.t} from {worker}")
        finally:
            if not read.done():
                read.cancel()

    def _accept_result(self, message: ResultMessage, worker: str) -> None:
        if message.task_id not in self.table.states:
            logger.warning(f"Worker {worker} sent a result for unknown task {message.task_id}")
            return
        spec = self.manifest.task(message.task_id)
        expected = spec.pairs()
        rows = [(t, c, float(d)) for t, c, d in message.rows]
        if any((t, c) not in expected for t, c, _ in rows):
            logger.warning(f"Result for task {message.task_id} from {worker} has foreign pairs, discarded")
            self.table.release(message.task_id, worker)
            return
        if self.table.complete(message.task_id, rows):
            logger.debug(f"Task {message.task_id} done by {worker} ({len(rows)} rows)")
        else:
            logger.debug(f"Duplicate result for task {message.task_id} from {worker} discarded")

    def _finish(self) -> List[VariateDistanceBlock]:
        failed = self.table.failed
        if failed:
            raise JobIncomplete(
                f"{len(failed)} tasks exhausted their retry budget: {failed[:10]}"
            )
        unfinished = len(self.table.states) - len(self.table.results)
        if unfinished:
            raise NoWorkersAvailable(f"all workers lost with {unfinished} tasks unfinished")
        logger.info(
            f"Job {self.manifest.job_id} complete: {len(self.table.results)} tasks, "
            f"{self.table.duplicates} duplicate results discarded"
        )
        return merge_results(self.manifest, self.table.results)

    async def run_with_endpoints(self, endpoints: Sequence[Tuple[str, int]]) -> List[VariateDistanceBlock]:
        """Dial every listening worker and run the job over the reachable ones."""
        connections = []
        for host, port in endpoints:
            try:
                reader, writer = await asyncio.wait_for(
                    asyncio.open_connection(host, port, limit=STREAM_LIMIT), self.timeout_s
                )
            except (OSError, asyncio.TimeoutError) as e:
                logger.warning(f"Worker {host}:{port} unreachable: {e}")
                continue
            connections.append((reader, writer, f"{host}:{port}"))
        if not connections:
            raise NoWorkersAvailable(f"none of {len(endpoints)} worker endpoints is reachable")

        logger.info(f"Dispatching {len(self.manifest.tasks)} tasks to {len(connections)} workers")
        await asyncio.gather(*(self._session(r, w, peer) for r, w, peer in connections))
        return self._finish()

    async def serve(self, host: str, port: int) -> List[VariateDistanceBlock]:
        """Accept connecting workers until the job settles."""
        self._settled = asyncio.Event()

        async def accept(reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
            peername = writer.get_extra_info("peername")
            peer = f"{peername[0]}:{peername[1]}" if peername else "unknown"
            await self._session(reader, writer, peer)

        server = await asyncio.start_server(accept, host, port, limit=STREAM_LIMIT)
        addresses = ", ".join(str(sock.getsockname()) for sock in server.sockets)
        logger.info(f"Coordinator for job {self.manifest.job_id} listening on {addresses}")
        async with server:
            await self._settled.wait()
        return self._finish()


def _verified(manifest: JobManifest, cohort_path: Optional[Union[str, Path]]) -> None:
    if cohort_path is None:
        return
    fingerprint = cohort_fingerprint(load_cohort_dir(cohort_path))
    if fingerprint != manifest.fingerprint:
        raise FingerprintMismatch(
            f"cohort at {cohort_path} ({fingerprint[:12]}) is not the one job "
            f"{manifest.job_id} was planned on ({manifest.fingerprint[:12]})"
        )


def run_distributed(
    manifest: JobManifest,
    cohort_path: Optional[Union[str, Path]],
    worker_endpoints: Union[str, Sequence[str]],
    timeout_s: float = DEFAULT_TIMEOUT_S,
    retries: int = DEFAULT_RETRIES,
) -> List[VariateDistanceBlock]:
    """Execute a job on listening TCP workers and merge the results.

    Args:
        manifest: Planned job.
        cohort_path: Cohort directory to check against the job fingerprint; the
            workers load their own copy. None skips the local check.
        worker_endpoints: "HOST:PORT" strings, or one comma-separated string.
        timeout_s: Per-task deadline before a task is reassigned.
        retries: Reassignments allowed per task.

    Returns:
        One merged block per variate, identical to run_local's output.

    Raises:
        NoWorkersAvailable: If no worker is reachable, or all are lost.
        JobIncomplete: If a task exhausted its retry budget.
        FingerprintMismatch: If cohort_path holds a different cohort.
    """
    _verified(manifest, cohort_path)
    endpoints = parse_endpoints(worker_endpoints)
    if not endpoints:
        raise NoWorkersAvailable("no worker endpoints given")
    coordinator = Coordinator(manifest, timeout_s, retries)
    started = time.perf_counter()
    blocks = asyncio.run(coordinator.run_with_endpoints(endpoints))
    logger.info(f"Distributed job {manifest.job_id} took {time.perf_counter() - started:.2f}s")
    return blocks


def coordinate(
    manifest: JobManifest,
    listen_addr: str,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    retries: int = DEFAULT_RETRIES,
) -> List[VariateDistanceBlock]:
    """Listen on listen_addr for connecting workers and run the job."""
    host, port = parse_endpoint(listen_addr)
    coordinator = Coordinator(manifest, timeout_s, retries)
    return asyncio.run(coordinator.serve(host, port))
