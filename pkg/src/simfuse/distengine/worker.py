"""Worker side of the distance engine.

A worker loads the raw cohort once, announces itself with REGISTER and then
answers every TASK with RESULT or NACK until the coordinator sends DONE.
"""

import asyncio
import logging
import os
import socket
import time
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel

from ..cohort.loader import load_cohort_dir
from ..cohort.models import Cohort
from ..errors import ProtocolError, SimfuseError
from .executor import TaskExecutor
from .protocol import (
    FINGERPRINT_MISMATCH,
    PROTOCOL_ERROR,
    STREAM_LIMIT,
    TASK_FAILED,
    DoneMessage,
    NackMessage,
    RegisterMessage,
    ResultMessage,
    TaskMessage,
    decode,
    parse_endpoint,
    send,
)

logger = logging.getLogger(__name__)


class WorkerService:
    """Serves coordinator sessions for one loaded cohort."""

    def __init__(self, cohort: Cohort, name: Optional[str] = None):
        self.executor = TaskExecutor(cohort)
        self.name = name or f"{socket.gethostname()}-{os.getpid()}"
        self.tasks_done = 0

    @classmethod
    def from_path(cls, cohort_path: Union[str, Path], name: Optional[str] = None) -> "WorkerService":
        cohort = load_cohort_dir(cohort_path)
        service = cls(cohort, name)
        logger.info(
            f"Worker {service.name} loaded {len(cohort)} patients from {cohort_path} "
            f"(fingerprint {service.fingerprint[:12]})"
        )
        return service

    @property
    def fingerprint(self) -> str:
        return self.executor.fingerprint

    def handle_task(self, message: TaskMessage) -> BaseModel:
        """Score one task, or explain why not."""
        config = message.config.model_dump()
        if self.executor.digest_for(config) != message.digest:
            logger.warning(f"Rejecting task {message.task_id}: digest does not match loaded cohort")
            return NackMessage(task_id=message.task_id, reason=FINGERPRINT_MISMATCH)
        try:
            rows = self.executor.run(message.to_spec(), config)
        except SimfuseError as e:
            logger.warning(f"Task {message.task_id} failed: {e}")
            return NackMessage(task_id=message.task_id, reason=f"{TASK_FAILED}: {e}")
        self.tasks_done += 1
        return ResultMessage(task_id=message.task_id, rows=rows)

    async def respond(self, message: TaskMessage) -> BaseModel:
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(None, self.handle_task, message)

    async def handle_connection(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        """Run one coordinator session on an open connection."""
        peer = writer.get_extra_info("peername")
        try:
            await send(writer, RegisterMessage(worker=self.name, fingerprint=self.fingerprint))
            while True:
                try:
                    line = await reader.readline()
                except ValueError as e:
                    # line exceeded STREAM_LIMIT; the buffer was discarded
                    await send(writer, NackMessage(reason=f"{PROTOCOL_ERROR}: {e}"))
                    continue
                if not line:
                    logger.info(f"Coordinator {peer} closed the connection")
                    break
                if not line.strip():
                    continue

                try:
                    message = decode(line)
                except ProtocolError as e:
                    logger.warning(f"Malformed message from {peer}: {e}")
                    await send(writer, NackMessage(reason=f"{PROTOCOL_ERROR}: {e}"))
                    continue

                if isinstance(message, DoneMessage):
                    logger.info(f"Session with {peer} done after {self.tasks_done} tasks")
                    break
                if not isinstance(message, TaskMessage):
                    await send(
                        writer,
                        NackMessage(reason=f"{PROTOCOL_ERROR}: unexpected {message.t} message"),
                    )
                    continue

                logger.debug(f"Task {message.task_id} ({message.variate}, {len(message.targets)} targets)")
                reply = await self.respond(message)
                await send(writer, reply)
        except (ConnectionError, asyncio.IncompleteReadError) as e:
            logger.warning(f"Lost connection to {peer}: {e}")
        finally:
            writer.close()
            try:
                await writer.wait_closed()
            except ConnectionError:
                pass


async def _serve(service: WorkerService, host: str, port: int) -> None:
    server = await asyncio.start_server(service.handle_connection, host, port, limit=STREAM_LIMIT)
    addresses = ", ".join(str(sock.getsockname()) for sock in server.sockets)
    logger.info(f"Worker {service.name} listening on {addresses}")
    async with server:
        await server.serve_forever()


def worker_serve(listen_addr: str, cohort_path: Union[str, Path]) -> None:
    """Accept coordinator sessions on listen_addr until interrupted.

    Args:
        listen_addr: "HOST:PORT" to bind.
        cohort_path: Cohort directory (static.csv plus series/).
    """
    host, port = parse_endpoint(listen_addr)
    service = WorkerService.from_path(cohort_path)
    asyncio.run(_serve(service, host, port))


async def _connect(service: WorkerService, host: str, port: int, retry_s: float) -> None:
    give_up = time.monotonic() + retry_s
    while True:
        try:
            reader, writer = await asyncio.open_connection(host, port, limit=STREAM_LIMIT)
            break
        except OSError as e:
            if time.monotonic() >= give_up:
                raise
            logger.debug(f"Coordinator {host}:{port} not reachable yet ({e}), retrying")
            await asyncio.sleep(0.5)
    logger.info(f"Worker {service.name} connected to {host}:{port}")
    await service.handle_connection(reader, writer)


def worker_connect(connect_addr: str, cohort_path: Union[str, Path], retry_s: float = 30.0) -> None:
    """Dial a listening coordinator and serve one session.

    Raises:
        OSError: If the coordinator stays unreachable for retry_s seconds.
    """
    host, port = parse_endpoint(connect_addr)
    service = WorkerService.from_path(cohort_path)
    asyncio.run(_connect(service, host, port, retry_s))
