"""Runs one configured experiment end to end: cache lookup, execution, report files."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path

from ..parallel import TaskPool
from ..rng import RngStream
from .config import ExperimentConfig
from .disk_cache import get_cached, store
from .experiments import RunContext
from .registry import EXPERIMENTS
from .report import ReportRow, rows_from_csv, rows_to_csv, write_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


@dataclass
class RunResult:
    rows: list[ReportRow]
    csv_path: Path
    json_path: Path
    runtime_s: float
    cached: bool = False

    @property
    def failed(self) -> list[ReportRow]:
        return [row for row in self.rows if not row.passed]

    @property
    def exit_status(self) -> int:
        return EXIT_FAILED if self.failed else EXIT_OK


def run(config: ExperimentConfig, threads: int = 1, timings: bool = False, use_cache: bool = False) -> RunResult:
    """Run ``config`` and write ``<experiment>.csv`` / ``<experiment>.json``.

    Exceptions raised by the experiment propagate; the CLI maps them to exit
    status 1. The result cache is consulted only with ``use_cache``; it is
    skipped when ``timings`` is set since the runtime column would differ.
    """
    use_cache = use_cache and not timings
    start = time.perf_counter()
    if use_cache:
        cached = get_cached(config)
        if cached is not None:
            logger.info("cache hit for %s (seed=%d)", config.experiment, config.seed)
            rows = rows_from_csv(cached)
            runtime = time.perf_counter() - start
            csv_path, json_path = write_report(rows, config, runtime, cached)
            return RunResult(rows, csv_path, json_path, runtime, cached=True)

    experiment = EXPERIMENTS[config.experiment]
    ctx = RunContext(config, RngStream(config.seed), TaskPool(threads, config.chunk_size))
    logger.info("running %s (seed=%d, threads=%d, chunk_size=%d)",
                config.experiment, config.seed, threads, config.chunk_size)
    rows = experiment.run(ctx)
    runtime = time.perf_counter() - start
    if timings:
        rows = [row.timed(runtime) for row in rows]

    csv_text = rows_to_csv(rows)
    csv_path, json_path = write_report(rows, config, runtime, csv_text)
    if use_cache:
        store(config, csv_text)
    result = RunResult(rows, csv_path, json_path, runtime)
    logger.info("%s finished: %d rows, %d failed, %.1fs", config.experiment, len(rows), len(result.failed), runtime)
    for row in result.failed:
        logger.warning("failed: %s (analytic=%s, estimate=%.6g, tolerance=%.3g)",
                       row.quantity, row.analytic, row.estimate, row.tolerance)
    return result
