"""Shared data structures: parameter errors and Monte Carlo estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ParameterError(ValueError):
    def __init__(self, message: str, name: str = ""):
        self.name = name
        super().__init__(f"{name}: {message}" if name else message)


def require_positive(name: str, value: float):
    if not (value > 0 and math.isfinite(value)):
        raise ParameterError(f"must be a finite positive number, got {value!r}", name)


@dataclass(frozen=True)
class MCEstimate:
    """Sample mean with its standard error."""
    mean: float
    stderr: float
    count: int = 0

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> MCEstimate:
        samples = np.asarray(samples, dtype=float).ravel()
        count = samples.size
        if count == 0:
            return cls(math.nan, math.nan, 0)
        mean = float(samples.mean())
        stderr = float(samples.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0
        return cls(mean, stderr, count)

    @classmethod
    def from_moments(cls, count: int, total: float, total_sq: float) -> MCEstimate:
        """Estimate from running sums, for reductions that never hold every sample."""
        if count == 0:
            return cls(math.nan, math.nan, 0)
        mean = total / count
        if count == 1:
            return cls(mean, 0.0, 1)
        variance = max(total_sq - count * mean**2, 0.0) / (count - 1)
        return cls(mean, math.sqrt(variance / count), count)

    def within(self, target: float, sigmas: float, slack: float = 0.0) -> bool:
        return abs(self.mean - target) <= sigmas * self.stderr + slack

    def __sub__(self, other: MCEstimate) -> MCEstimate:
        # Independent estimates: standard errors add in quadrature.
        return MCEstimate(self.mean - other.mean, math.hypot(self.stderr, other.stderr),
                          min(self.count, other.count))
