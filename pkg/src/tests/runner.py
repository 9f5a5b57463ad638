"""Pytest runner for gemdiff acceptance experiments.

For each test_*.gemcfg file under experiments/:
1. Parse the config
2. Run it single-threaded and with four threads, cache disabled
3. Assert every report row passed
4. Assert both CSV reports are byte-identical
5. Compare against a golden expected CSV if available

These runs take minutes each; they are deselected by default. Run them with
``pytest -m acceptance src/tests/runner.py``.
"""

import os

import pytest

from src.gemdiff.harness.config import load_config
from src.gemdiff.harness.runner import EXIT_OK, run

EXPERIMENT_DIR = os.path.join(os.path.dirname(__file__), "experiments")

# Thread counts compared for determinism; overridable for slower machines.
GEMDIFF_ACCEPTANCE_THREADS = [int(t) for t in os.environ.get("GEMDIFF_ACCEPTANCE_THREADS", "1,4").split(",")]


def get_experiment_files():
    """Recursively find all test_*.gemcfg files under the experiments directory."""
    tests = []
    for root, _dirs, files in os.walk(EXPERIMENT_DIR):
        for f in sorted(files):
            if f.startswith("test_") and f.endswith(".gemcfg"):
                tests.append(os.path.relpath(os.path.join(root, f), EXPERIMENT_DIR))
    return sorted(tests)


@pytest.mark.acceptance
@pytest.mark.parametrize("config_file", get_experiment_files())
def test_experiment_file(config_file, tmp_path):
    config_path = os.path.join(EXPERIMENT_DIR, config_file)
    config, _ = load_config(config_path)

    reports = []
    for threads in GEMDIFF_ACCEPTANCE_THREADS:
        out = tmp_path / f"threads-{threads}"
        result = run(config.with_overrides(output_dir=str(out)), threads=threads, use_cache=False)
        failed = "\n".join(f"  {row.quantity}: estimate={row.estimate} analytic={row.analytic} "
                           f"tolerance={row.tolerance}" for row in result.failed)
        assert result.exit_status == EXIT_OK, f"{config_file} with {threads} threads failed rows:\n{failed}"
        reports.append(result.csv_path.read_text())

    for threads, report in zip(GEMDIFF_ACCEPTANCE_THREADS[1:], reports[1:], strict=True):
        assert report == reports[0], (
            f"CSV with {threads} threads differs from {GEMDIFF_ACCEPTANCE_THREADS[0]} threads"
        )

    # Compare against golden expected output if available
    name = os.path.basename(config_file).replace(".gemcfg", ".csv")
    expected_path = os.path.join(os.path.dirname(config_path), "expected", name)
    if os.path.exists(expected_path):
        with open(expected_path) as ef:
            expected = ef.read()
        assert reports[0] == expected, (
            f"Report mismatch vs golden file:\nExpected:\n{expected}\nGot:\n{reports[0]}"
        )
