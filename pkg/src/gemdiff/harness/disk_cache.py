"""On-disk result cache for the gemdiff CLI.

Stores the CSV report of a run keyed by SHA256 of the canonical
configuration and of the package sources. A cache hit skips the experiment
entirely; any change to the experiment, seed, chunk size, a parameter or the
code produces a different key. The cache is opt-in (`gemdiff run --cache`).

Cache location: .gemdiff-cache/ in the working directory.
"""

from __future__ import annotations

import functools
import hashlib
import os
from pathlib import Path

from .config import ExperimentConfig

# Version stamp: bump when an experiment's rows change for the same input
_CACHE_VERSION = "1"

_CACHE_DIR = ".gemdiff-cache"

_PACKAGE_DIR = Path(__file__).resolve().parent.parent


def _cache_dir() -> str:
    cache = os.path.join(os.getcwd(), _CACHE_DIR)
    os.makedirs(cache, exist_ok=True)
    return cache


@functools.cache
def _code_fingerprint() -> str:
    """SHA256 over every non-test source file of the package."""
    digest = hashlib.sha256()
    for path in sorted(_PACKAGE_DIR.rglob("*.py")):
        if "tests" in path.relative_to(_PACKAGE_DIR).parts:
            continue
        digest.update(path.relative_to(_PACKAGE_DIR).as_posix().encode("utf-8"))
        digest.update(path.read_bytes())
    return digest.hexdigest()


def _cache_key(config: ExperimentConfig) -> str:
    content = f"v{_CACHE_VERSION}\n{_code_fingerprint()}\n{config.canonical()}"
    return hashlib.sha256(content.encode("utf-8")).hexdigest()


def get_cached(config: ExperimentConfig) -> str | None:
    """Cached CSV text for ``config``, or None."""
    path = os.path.join(_cache_dir(), f"{_cache_key(config)}.csv")
    if os.path.exists(path):
        with open(path) as f:
            return f.read()
    return None


def store(config: ExperimentConfig, csv_text: str) -> None:
    path = os.path.join(_cache_dir(), f"{_cache_key(config)}.csv")
    with open(path, "w") as f:
        f.write(csv_text)
