"""Stick-breaking map, GEM and Poisson–Dirichlet samplers, Dirichlet random measures.

Infinite sequences are represented by their first ``n`` entries plus the mass
that the truncation leaves over:

    stick point  x = (x_1, ..., x_n) ∈ [0, 1)^n
    simplex point y = φ(x),  y_i = x_i ∏_{l<i} (1 − x_l),  remainder = ∏_{l≤n} (1 − x_l)

Array variants (``*_array``) work on a batch of points stored row-wise and are
what the Monte Carlo code calls; the scalar functions wrap them for single
points.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.special

from .core import ParameterError
from .rng import RngStream

logger = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-12
SIZE_BIAS_MAX_REMAINDER = 0.01
MAX_TRUNCATION = 2000


class BoundaryPoint(ArithmeticError):
    def __init__(self, message: str, index: int):
        self.index = index
        super().__init__(f"{message} (coordinate {index})")


class MassDeficit(ValueError):
    def __init__(self, remainder: float):
        self.remainder = remainder
        super().__init__(f"remainder {remainder:.3g} exceeds {SIZE_BIAS_MAX_REMAINDER}; "
                         "size-biased order is undefined on a heavily truncated vector")


class PartitionError(ValueError):
    pass


# --- Domain types ---

@dataclass(frozen=True, eq=False)
class StickPoint:
    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 1:
            raise ParameterError("must be a one-dimensional sequence", "u")
        if np.any((u < 0.0) | (u >= 1.0)) or not np.all(np.isfinite(u)):
            raise ParameterError("every stick coordinate must lie in [0, 1)", "u")
        object.__setattr__(self, "u", u)

    def __len__(self) -> int:
        return self.u.size


@dataclass(frozen=True, eq=False)
class SimplexPoint:
    y: np.ndarray
    remainder: float = 0.0

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1:
            raise ParameterError("must be a one-dimensional sequence", "y")
        if np.any(y < 0.0) or self.remainder < 0.0:
            raise ParameterError("weights and remainder must be non-negative", "y")
        total = math.fsum(y) + self.remainder
        if abs(total - 1.0) > MASS_TOLERANCE * max(1, y.size):
            raise ParameterError(f"weights plus remainder must sum to 1, got {total!r}", "y")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "remainder", float(self.remainder))

    def __len__(self) -> int:
        return self.y.size


@dataclass(frozen=True)
class GEMParams:
    """Two-parameter GEM law; ``alpha = 0`` is the one-parameter family."""
    theta: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ParameterError(f"must lie in [0, 1), got {self.alpha!r}", "alpha")
        if not (self.theta + self.alpha > 0 and math.isfinite(self.theta)):
            raise ParameterError(f"must exceed −alpha={-self.alpha!r}, got {self.theta!r}", "theta")

    def stick_shapes(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Beta shapes (1 − α, θ + kα) of the sticks V_1..V_n."""
        k = np.arange(1, n + 1, dtype=float)
        return np.full(n, 1.0 - self.alpha), self.theta + k * self.alpha

    def expected_remainder(self, n: int) -> float:
        """E[∏_{k≤n}(1 − V_k)] = ∏ (θ + kα)/(θ + kα + 1 − α)."""
        a, b = self.stick_shapes(n)
        return float(np.prod(b / (a + b)))

    def default_truncation(self, target: float = 1e-6, cap: int = MAX_TRUNCATION) -> int:
        """Smallest n with E[remainder] < ``target``, never below 60 when θ ≤ 2.

        Two-parameter remainders decay polynomially, so the search stops at ``cap``.
        """
        n = 60 if self.theta <= 2 else 1
        while n < cap and self.expected_remainder(n) >= target:
            n += 1
        if self.expected_remainder(n) >= target:
            logger.warning("truncation capped at n=%d with expected remainder %.3g", n, self.expected_remainder(n))
        return n


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    weights: np.ndarray
    types: np.ndarray
    remainder: float = 0.0

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        types = np.asarray(self.types, dtype=float)
        if weights.shape != types.shape:
            raise ParameterError(f"{weights.size} weights but {types.size} types", "types")
        if np.any(weights < 0.0) or math.fsum(weights) > 1.0 + MASS_TOLERANCE * max(1, weights.size):
            raise ParameterError("weights must be non-negative with total at most 1", "weights")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "types", types)

    @property
    def total_mass(self) -> float:
        return math.fsum(self.weights)

    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.weights.tolist(), self.types.tolist()))


TypeSampler = Callable[[RngStream, "int | tuple[int, ...]"], np.ndarray]


def uniform_types(rng: RngStream, size) -> np.ndarray:
    """ν = Uniform[0, 1], the default diffuse type law."""
    return rng.uniform(size)


# --- The map Φ ---

def phi_array(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise φ; returns ``(y, remainder)`` for stick coordinates ``x`` of shape (..., n)."""
    x = np.asarray(x, dtype=float)
    survival = np.cumprod(1.0 - x, axis=-1)
    before = np.concatenate([np.ones_like(x[..., :1]), survival[..., :-1]], axis=-1)
    return x * before, survival[..., -1] if x.shape[-1] else np.ones(x.shape[:-1])


def tail_masses(y: np.ndarray, remainder) -> np.ndarray:
    """T_k = 1 − Σ_{l<k} y_l for k = 1..n+1, accumulated from the remainder upward.

    Summing the small tail first avoids the cancellation of 1 − (partial sum)
    near the boundary; T_{n+1} is the remainder itself.
    """
    y = np.asarray(y, dtype=float)
    remainder = np.asarray(remainder, dtype=float)
    tails = np.empty(y.shape[:-1] + (y.shape[-1] + 1,))
    total = np.broadcast_to(remainder, y.shape[:-1]).astype(float)
    carry = np.zeros_like(total)
    tails[..., -1] = total
    # Kahan summation, one column at a time.
    for k in range(y.shape[-1] - 1, -1, -1):
        term = y[..., k] - carry
        running = total + term
        carry = (running - total) - term
        total = running
        tails[..., k] = total
    return tails


def phi_inverse_array(y: np.ndarray, remainder) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise φ⁻¹; returns ``(x, ok)`` where rows with ``ok == False`` sit on the boundary.

    Boundary rows (a denominator 1 − Σ_{l<i} y_l vanishes, or a stick equals 1)
    have undefined entries set to 0.
    """
    tails = tail_masses(y, remainder)[..., :-1]
    y = np.asarray(y, dtype=float)
    x = np.divide(y, tails, out=np.zeros_like(y), where=tails > 0)
    x = np.minimum(x, 1.0)
    ok = np.all(tails > 0, axis=-1) & np.all(x < 1.0, axis=-1)
    return x, ok


def phi(x: StickPoint) -> SimplexPoint:
    y, remainder = phi_array(x.u)
    return SimplexPoint(y, float(remainder))


def phi_inverse(y: SimplexPoint) -> StickPoint:
    tails = tail_masses(y.y, y.remainder)[:-1]
    vanished = np.flatnonzero(tails <= 0.0)
    if vanished.size:
        raise BoundaryPoint("partial sum reaches 1 before this coordinate", int(vanished[0]) + 1)
    x = np.minimum(y.y / tails, 1.0)
    full = np.flatnonzero(x >= 1.0)
    if full.size:
        raise BoundaryPoint("stick coordinate equals 1", int(full[0]) + 1)
    return StickPoint(x)


# --- GEM and Poisson–Dirichlet ---

def sample_sticks_array(p: GEMParams, n: int, rng: RngStream, size: int) -> np.ndarray:
    """``size`` rows of independent sticks V_k ~ Beta(1 − α, θ + kα), k = 1..n."""
    a, b = p.stick_shapes(n)
    return rng.beta(a, b, (size, n))


def sample_gem_array(p: GEMParams, n: int, rng: RngStream, size: int) -> tuple[np.ndarray, np.ndarray]:
    return phi_array(sample_sticks_array(p, n, rng, size))


def sample_gem(p: GEMParams, n: int, rng: RngStream) -> SimplexPoint:
    if n < 1:
        raise ParameterError(f"must be at least 1, got {n}", "n")
    y, remainder = sample_gem_array(p, n, rng, 1)
    return SimplexPoint(y[0], float(remainder[0]))


def descending_order_array(y: np.ndarray) -> np.ndarray:
    """Sort each row descending; ties keep their original order."""
    order = np.argsort(-np.asarray(y), axis=-1, kind="stable")
    return np.take_along_axis(np.asarray(y), order, axis=-1)


def descending_order(y: SimplexPoint) -> SimplexPoint:
    return SimplexPoint(descending_order_array(y.y), y.remainder)


def size_biased_permutation_array(y: np.ndarray, rng: RngStream) -> np.ndarray:
    """Size-biased reordering of every row.

    Drawing indices one at a time with probability proportional to weight
    among those left is the same as ordering the indices by independent
    exponential clocks E_i / y_i; zero weights never ring and stay last in
    their original order.
    """
    y = np.asarray(y, dtype=float)
    clocks = np.full(y.shape, np.inf)
    np.divide(rng.exponential(y.shape), y, out=clocks, where=y > 0)
    order = np.argsort(clocks, axis=-1, kind="stable")
    return np.take_along_axis(y, order, axis=-1)


def size_biased_permutation(y: SimplexPoint, rng: RngStream) -> SimplexPoint:
    if y.remainder > SIZE_BIAS_MAX_REMAINDER:
        raise MassDeficit(y.remainder)
    return SimplexPoint(size_biased_permutation_array(y.y[None, :], rng)[0], y.remainder)


# --- Dirichlet random measures ---

def sample_dirichlet_measure_array(p: GEMParams, nu: TypeSampler, n: int, rng: RngStream,
                                   size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(weights, types, remainder)`` for ``size`` independent Θ = Σ P_k δ_{ξ_k}."""
    weights, remainder = sample_gem_array(p, n, rng, size)
    types = np.asarray(nu(rng, (size, n)), dtype=float)
    return weights, types, remainder


def sample_dirichlet_measure(p: GEMParams, nu: TypeSampler, n: int, rng: RngStream) -> DiscreteMeasure:
    weights, types, remainder = sample_dirichlet_measure_array(p, nu, n, rng, 1)
    return DiscreteMeasure(weights[0], types[0], float(remainder[0]))


# --- Ewens sampling formula ---

def _validate_partition(partition: Sequence[int]) -> list[int]:
    blocks = list(partition)
    if not blocks:
        raise PartitionError("a partition needs at least one block")
    for size in blocks:
        if isinstance(size, bool) or int(size) != size or size < 1:
            raise PartitionError(f"block sizes must be positive integers, got {size!r}")
    return [int(s) for s in blocks]


def esf_probability(partition: Sequence[int], theta: float) -> float:
    """Ewens sampling formula for the allelic partition with the given block sizes.

        P = n! / θ^(n) · ∏_j (θ/j)^{a_j} / a_j!

    with θ^(n) the rising factorial and a_j the number of blocks of size j,
    evaluated in log space.
    """
    if not (theta > 0 and math.isfinite(theta)):
        raise ParameterError(f"must be a finite positive number, got {theta!r}", "theta")
    blocks = _validate_partition(partition)
    n = sum(blocks)
    counts = Counter(blocks)
    log_p = scipy.special.gammaln(n + 1) + scipy.special.gammaln(theta) - scipy.special.gammaln(theta + n)
    for j, a_j in counts.items():
        log_p += a_j * (math.log(theta) - math.log(j)) - scipy.special.gammaln(a_j + 1)
    return float(math.exp(log_p))


def integer_partitions(n: int, largest: int | None = None) -> Iterator[tuple[int, ...]]:
    """Partitions of ``n`` as non-increasing tuples."""
    if largest is None:
        largest = n
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in integer_partitions(n - first, first):
            yield (first, *rest)


def allelic_partitions(weights: np.ndarray, k: int, rng: RngStream) -> list[tuple[int, ...]]:
    """Draw ``k`` individuals from each row's measure and return the block sizes of equal types.

    Types are distinct almost surely for a diffuse ν, so blocks are groups of
    individuals that picked the same atom. An individual that lands in the
    truncation remainder is its own block.
    """
    weights = np.asarray(weights, dtype=float)
    cumulative = np.cumsum(weights, axis=-1)
    u = rng.uniform((weights.shape[0], k))
    picks = (cumulative[:, :, None] <= u[:, None, :]).sum(axis=1)
    n = weights.shape[1]
    shapes = []
    for row in picks:
        counts = Counter(int(i) for i in row if i < n)
        singles = int(np.sum(row >= n))
        shapes.append(tuple(sorted([*counts.values(), *([1] * singles)], reverse=True)))
    return shapes
