"""Reproducible random streams.

Every stream is a counter-based Philox generator seeded from
``SeedSequence(seed, spawn_key=key)``. A worker never shares a stream: it
derives its own with ``substream(task_id)``, so the numbers a task sees depend
only on ``(seed, key)`` and never on scheduling or thread count.
"""

from __future__ import annotations

import numpy as np
import scipy.special

from .core import ParameterError

_SEED_LIMIT = 2**64


class RngStream:
    def __init__(self, seed: int, key: tuple[int, ...] = ()):
        if not 0 <= seed < _SEED_LIMIT:
            raise ParameterError(f"must be a 64-bit unsigned integer, got {seed!r}", "seed")
        self.seed = seed
        self.key = tuple(key)
        sequence = np.random.SeedSequence(seed, spawn_key=self.key)
        self.generator = np.random.Generator(np.random.Philox(sequence))

    def substream(self, task_id: int) -> RngStream:
        return RngStream(self.seed, self.key + (task_id,))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, key={self.key})"

    # --- Variates ---

    def normal(self, size=None) -> np.ndarray:
        return self.generator.standard_normal(size)

    def uniform(self, size=None) -> np.ndarray:
        return self.generator.random(size)

    def log_gamma(self, shape, size=None) -> np.ndarray:
        """log G for G ~ Gamma(shape, 1), finite even where G itself underflows.

        Shapes below 1 use G_s = G_{s+1} U^{1/s}. One gamma and one uniform are
        drawn per variate whatever the shape.
        """
        shape = np.asarray(shape, dtype=float)
        if size is None:
            size = shape.shape or None
        small = shape < 1.0
        g = self.generator.standard_gamma(np.where(small, shape + 1.0, shape), size)
        u = 1.0 - self.generator.random(size)
        return np.log(g) + np.where(small, np.log(u) / shape, 0.0)

    def beta(self, a, b, size=None) -> np.ndarray:
        """Beta(a, b) as G_a / (G_a + G_b), evaluated as expit(log G_a - log G_b)."""
        if size is None:
            size = np.broadcast(np.asarray(a), np.asarray(b)).shape or None
        ratio = scipy.special.expit(self.log_gamma(a, size) - self.log_gamma(b, size))
        return ratio if np.ndim(ratio) else float(ratio)

    def exponential(self, size=None) -> np.ndarray:
        return self.generator.standard_exponential(size)

    def dirichlet(self, alpha, size=None) -> np.ndarray:
        return self.generator.dirichlet(alpha, size)
