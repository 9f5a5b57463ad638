#!/usr/bin/env python3
"""gemdiff: simulation and verification experiments for GEM diffusions.

Usage: gemdiff run <experiment.gemcfg> [--seed N] [--out DIR] [--threads N] [--timings] [--cache]
       gemdiff list-experiments
"""

import argparse
import logging
import os
import sys
from pathlib import Path

from .harness.config import ConfigError, describe_defaults, format_error, parse_config
from .harness.registry import EXPERIMENTS
from .harness.runner import EXIT_CONFIG, EXIT_FAILED, run
from .parallel import THREADS_ENV, threads_from_env

logger = logging.getLogger("gemdiff")


def _build_parser() -> argparse.ArgumentParser:
    argparser = argparse.ArgumentParser(prog="gemdiff", description="GEM diffusion experiments",
                                        epilog=describe_defaults(),
                                        formatter_class=argparse.RawDescriptionHelpFormatter)
    argparser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")
    commands = argparser.add_subparsers(dest="command", required=True)

    run_cmd = commands.add_parser("run", help="Run one experiment file", epilog=describe_defaults(),
                                  formatter_class=argparse.RawDescriptionHelpFormatter)
    run_cmd.add_argument("config", help="Experiment file (.gemcfg)")
    run_cmd.add_argument("--seed", type=int, help="Override the seed from the file")
    run_cmd.add_argument("--out", help="Override the output directory from the file")
    run_cmd.add_argument("--threads", type=int,
                         help=f"Worker threads (default: ${THREADS_ENV}, else 1); results do not depend on it")
    run_cmd.add_argument("--timings", action="store_true",
                         help="Fill the runtime_s column (bypasses the cache)")
    run_cmd.add_argument("--cache", action="store_true",
                         help="Reuse a stored report for an identical config and code version instead of recomputing")

    commands.add_parser("list-experiments", help="List experiment names and parameter defaults")
    return argparser


def _list_experiments():
    width = max(len(name) for name in EXPERIMENTS)
    for name, experiment in EXPERIMENTS.items():
        print(f"{name:<{width}}  {experiment.summary}")
    print()
    print(describe_defaults())


def _run(args) -> int:
    try:
        source = Path(args.config).read_text()
    except FileNotFoundError:
        print(f"error: file '{args.config}' not found", file=sys.stderr)
        return EXIT_CONFIG
    filename = os.path.basename(args.config)
    try:
        config = parse_config(source, filename)
    except ConfigError as e:
        print(format_error(source, filename, e.message, e.line, e.col), file=sys.stderr)
        return EXIT_CONFIG

    try:
        config = config.with_overrides(seed=args.seed, output_dir=args.out)
        threads = args.threads if args.threads is not None else threads_from_env()
        if threads < 1:
            raise ValueError(f"--threads must be at least 1, got {threads}")
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = run(config, threads=threads, timings=args.timings, use_cache=args.cache)
    except Exception as e:
        logger.error("%s aborted: %s: %s", config.experiment, type(e).__name__, e)
        logger.debug("traceback", exc_info=True)
        return EXIT_FAILED

    print(f"{config.experiment}: {len(result.rows) - len(result.failed)}/{len(result.rows)} rows passed"
          f"{' (cached)' if result.cached else ''} -> {result.csv_path}")
    return result.exit_status


def main(argv: list[str] | None = None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list-experiments":
        _list_experiments()
        sys.exit(0)
    sys.exit(_run(args))


if __name__ == "__main__":
    main()
