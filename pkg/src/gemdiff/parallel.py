"""Thread pool for embarrassingly parallel Monte Carlo work.

Tasks are numbered; task ``i`` always receives ``stream.substream(i)`` and
results come back in task order, so reductions are deterministic for every
thread count. numpy releases the GIL inside its vectorized kernels, which is
where the time goes.
"""

from __future__ import annotations

import logging
import math
import os
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from .core import ParameterError
from .rng import RngStream

logger = logging.getLogger(__name__)

T = TypeVar("T")

THREADS_ENV = "GEMDIFF_THREADS"
DEFAULT_CHUNK = 10_000


def threads_from_env(default: int = 1) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ParameterError(f"expected an integer, got {raw!r}", THREADS_ENV) from None
    if value < 1:
        raise ParameterError(f"must be at least 1, got {value}", THREADS_ENV)
    return value


def chunk_sizes(total: int, chunk: int) -> list[int]:
    """Split ``total`` items into consecutive chunks of at most ``chunk``."""
    if total <= 0:
        return []
    count = math.ceil(total / chunk)
    return [min(chunk, total - i * chunk) for i in range(count)]


class TaskPool:
    def __init__(self, threads: int = 1, chunk_size: int = DEFAULT_CHUNK):
        if threads < 1:
            raise ParameterError(f"must be at least 1, got {threads}", "threads")
        if chunk_size < 1:
            raise ParameterError(f"must be at least 1, got {chunk_size}", "chunk_size")
        self.threads = threads
        self.chunk_size = chunk_size

    def map(self, fn: Callable[[int, RngStream], T], n_tasks: int, stream: RngStream) -> list[T]:
        """Run ``fn(task_id, stream.substream(task_id))`` for every task, in task order."""
        streams = [stream.substream(i) for i in range(n_tasks)]
        if self.threads == 1 or n_tasks <= 1:
            return [fn(i, s) for i, s in enumerate(streams)]
        logger.debug("dispatching %d tasks on %d threads", n_tasks, self.threads)
        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            futures = [executor.submit(fn, i, s) for i, s in enumerate(streams)]
            return [f.result() for f in futures]

    def map_chunks(self, fn: Callable[[int, RngStream], T], total: int, stream: RngStream) -> list[T]:
        """Split ``total`` items into ``chunk_size`` pieces; ``fn(size, stream)`` handles one piece."""
        sizes = chunk_sizes(total, self.chunk_size)
        return self.map(lambda i, s: fn(sizes[i], s), len(sizes), stream)


SERIAL = TaskPool()
