"""Report rows and their CSV / JSON serializations."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

from ..core import MCEstimate
from .config import ExperimentConfig

SCHEMA_VERSION = 1
CSV_HEADER = ("experiment", "quantity", "analytic", "estimate", "stderr", "tolerance", "pass", "runtime_s")


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    quantity: str
    analytic: float | None
    estimate: float
    stderr: float | None
    tolerance: float
    passed: bool
    runtime_s: float | None = None

    # --- Constructors ---

    @classmethod
    def matches(cls, experiment: str, quantity: str, analytic: float, estimate: MCEstimate,
                sigmas: float, slack: float = 0.0) -> ReportRow:
        """Two-sided: |estimate − analytic| ≤ sigmas·stderr + slack."""
        tolerance = sigmas * estimate.stderr + slack
        passed = abs(estimate.mean - analytic) <= tolerance
        return cls(experiment, quantity, analytic, estimate.mean, estimate.stderr, tolerance, passed)

    @classmethod
    def exact(cls, experiment: str, quantity: str, analytic: float, value: float, tolerance: float) -> ReportRow:
        """Deterministic comparison with an absolute tolerance."""
        return cls(experiment, quantity, analytic, value, None, tolerance, abs(value - analytic) <= tolerance)

    @classmethod
    def at_most(cls, experiment: str, quantity: str, bound: float, value: float,
                stderr: float | None = None, tolerance: float = 0.0) -> ReportRow:
        """One-sided: value ≤ bound + tolerance."""
        return cls(experiment, quantity, bound, value, stderr, tolerance, value <= bound + tolerance)

    @classmethod
    def at_least(cls, experiment: str, quantity: str, bound: float, value: float,
                 stderr: float | None = None, tolerance: float = 0.0) -> ReportRow:
        """One-sided: value ≥ bound − tolerance."""
        return cls(experiment, quantity, bound, value, stderr, tolerance, value >= bound - tolerance)

    @classmethod
    def flag(cls, experiment: str, quantity: str, value: float, passed: bool) -> ReportRow:
        """A count or statistic whose pass flag was decided elsewhere."""
        return cls(experiment, quantity, None, value, None, 0.0, passed)

    @classmethod
    def reference(cls, experiment: str, quantity: str, reference: float, value: float,
                  stderr: float | None = None) -> ReportRow:
        """Reported next to a reference value; never fails the run."""
        return cls(experiment, quantity, reference, value, stderr, math.nan, True)

    def timed(self, seconds: float) -> ReportRow:
        return replace(self, runtime_s=seconds)


def _number(value: float | None) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return format(value, ".10g")


def rows_to_csv(rows: list[ReportRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([row.experiment, row.quantity, _number(row.analytic), _number(row.estimate),
                         _number(row.stderr), _number(row.tolerance), "true" if row.passed else "false",
                         _number(row.runtime_s)])
    return buffer.getvalue()


def summary_json(rows: list[ReportRow], config: ExperimentConfig, runtime_s: float) -> str:
    failed = [row.quantity for row in rows if not row.passed]
    summary = {
        "schema": SCHEMA_VERSION,
        "experiment": config.experiment,
        "seed": config.seed,
        "config": json.loads(config.canonical()),
        "rows": len(rows),
        "failed": failed,
        "passed": not failed,
        "runtime_s": round(runtime_s, 3),
    }
    return json.dumps(summary, indent=2) + "\n"


def write_report(rows: list[ReportRow], config: ExperimentConfig, runtime_s: float,
                 csv_text: str | None = None) -> tuple[Path, Path]:
    """Write ``<experiment>.csv`` and ``<experiment>.json`` under the output directory."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{config.experiment}.csv"
    json_path = out / f"{config.experiment}.json"
    csv_path.write_text(rows_to_csv(rows) if csv_text is None else csv_text)
    json_path.write_text(summary_json(rows, config, runtime_s))
    return csv_path, json_path


def parse_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


def _optional(text: str) -> float | None:
    return float(text) if text else None


def rows_from_csv(text: str) -> list[ReportRow]:
    """Rebuild rows from ``rows_to_csv`` output; blank cells come back as None."""
    return [ReportRow(experiment=r["experiment"], quantity=r["quantity"], analytic=_optional(r["analytic"]),
                      estimate=float(r["estimate"]) if r["estimate"] else math.nan, stderr=_optional(r["stderr"]),
                      tolerance=float(r["tolerance"]) if r["tolerance"] else math.nan, passed=r["pass"] == "true",
                      runtime_s=_optional(r["runtime_s"]))
            for r in parse_csv(text)]
