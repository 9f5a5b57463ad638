"""Poincaré and log-Sobolev constants of the GEM process and their Monte Carlo checks.

The static checks compare Var and Ent against the Dirichlet form over exact
stationary samples. The decay experiments run a nested Monte Carlo: outer
points are drawn from Ξ_{a,b}, mapped to stick coordinates, and each one is
followed by ``inner`` independent paths to estimate P_t f at every grid time.

Every measure-level quantity uses the Itô normalization, the one for which
Ξ(Γ(f, g)) = −Ξ(f ℒ g).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.special

from .core import MCEstimate, ParameterError, require_positive
from .generator.coefficients import Normalization
from .generator.cylinder import CylinderFunction, PolynomialCylinder
from .generator.operators import gamma_array
from .generator.params import ParamSeq
from .parallel import SERIAL, TaskPool
from .rng import RngStream
from .stick_breaking import BoundaryPoint, phi_array, phi_inverse_array
from .wf_diffusion import evolve, warn_if_unsafe

logger = logging.getLogger(__name__)

LSI_DIVISOR = 320.0
MAX_RELATIVE_STDERR = 0.2
MAX_REDRAWS = 100


class NoUniformBound(ArithmeticError):
    def __init__(self, value: float):
        self.value = value
        super().__init__(f"inf(a_i ∧ b_i) = {value!r}; no uniform log-Sobolev bound")


class InsufficientSamples(RuntimeError):
    def __init__(self, quantity: str, estimate: float, stderr: float):
        self.quantity = quantity
        self.estimate = estimate
        self.stderr = stderr
        super().__init__(f"{quantity}: standard error {stderr:.3g} exceeds "
                         f"{MAX_RELATIVE_STDERR:.0%} of the estimate {estimate:.3g}")


def _require_precision(quantity: str, estimate: float, stderr: float) -> None:
    if stderr > MAX_RELATIVE_STDERR * abs(estimate):
        raise InsufficientSamples(quantity, estimate, stderr)


# --- Constants ---

def lsi_lower_bound(p: ParamSeq) -> float:
    """β ≥ inf_i (a_i ∧ b_i) / 320."""
    smallest = p.inf_min_ab
    if smallest <= 0:
        raise NoUniformBound(smallest)
    return smallest / LSI_DIVISOR


def poincare_bound(p: ParamSeq) -> float:
    """Spectral gap inf_i (a_i + b_i)."""
    return p.inf_rate


@dataclass(frozen=True)
class MeasureConstants:
    """Constants for the measure-valued process with type-process constant ``alpha``."""
    alpha: float
    lsi: float
    poincare: float


def measure_lsi_constant(p: ParamSeq, alpha_types: float) -> MeasureConstants:
    """α ∧ β for the log-Sobolev inequality and α ∧ inf(a_i+b_i) for the Poincaré one."""
    require_positive("alpha_types", alpha_types)
    return MeasureConstants(alpha_types, min(alpha_types, lsi_lower_bound(p)), min(alpha_types, poincare_bound(p)))


# --- Static checks on exact stationary samples ---

def _stationary_columns(f: CylinderFunction, p: ParamSeq) -> int:
    if f.n > p.n:
        raise ParameterError(f"{f.name} depends on {f.n} coordinates, parameters cover {p.n}", "p")
    return f.n


def dirichlet_form_mc(f: CylinderFunction, p: ParamSeq, n_samples: int, rng: RngStream,
                      pool: TaskPool = SERIAL, g: CylinderFunction | None = None,
                      normalization: Normalization = Normalization.ITO) -> MCEstimate:
    """E(f, g) = Ξ_{a,b}(Γ(f, g)), averaged over exact samples of the leading coordinates."""
    g = f if g is None else g
    m = max(_stationary_columns(f, p), _stationary_columns(g, p))
    if m == 0:
        return MCEstimate(0.0, 0.0, n_samples)

    def run_chunk(size: int, stream: RngStream) -> np.ndarray:
        y, remainder = p.sample_simplex(stream, size, m)
        return gamma_array(f, g, y, remainder, normalization)

    return MCEstimate.from_samples(np.concatenate(pool.map_chunks(run_chunk, n_samples, rng)))


@dataclass(frozen=True)
class StaticCheck:
    """``lhs ≤ rhs`` checked through the per-sample margin rhs − lhs."""
    name: str
    lhs: float
    rhs: float
    margin: MCEstimate
    sigmas: float = 3.0

    @property
    def passed(self) -> bool:
        return self.margin.mean >= -self.sigmas * self.margin.stderr


def _stationary_values(f: CylinderFunction, p: ParamSeq, n_samples: int, rng: RngStream,
                       pool: TaskPool) -> tuple[np.ndarray, np.ndarray]:
    m = _stationary_columns(f, p)

    def run_chunk(size: int, stream: RngStream) -> tuple[np.ndarray, np.ndarray]:
        y, remainder = p.sample_simplex(stream, size, m)
        return f.value(y), gamma_array(f, f, y, remainder, Normalization.ITO)

    chunks = pool.map_chunks(run_chunk, n_samples, rng)
    return np.concatenate([c[0] for c in chunks]), np.concatenate([c[1] for c in chunks])


def poincare_check(f: CylinderFunction, p: ParamSeq, n_samples: int, rng: RngStream,
                   pool: TaskPool = SERIAL, sigmas: float = 3.0) -> StaticCheck:
    """Var_Ξ(f) ≤ E(f, f) / inf(a_i + b_i)."""
    values, gammas = _stationary_values(f, p, n_samples, rng, pool)
    gap = poincare_bound(p)
    spread = (values - values.mean()) ** 2
    margin = MCEstimate.from_samples(gammas / gap - spread)
    return StaticCheck(f"poincare {f.name}", float(spread.mean()), float(gammas.mean() / gap), margin, sigmas)


def lsi_check(f: CylinderFunction, p: ParamSeq, n_samples: int, rng: RngStream,
              pool: TaskPool = SERIAL, sigmas: float = 3.0) -> StaticCheck:
    """Ent_Ξ(f²) ≤ E(f, f) / β with β = lsi_lower_bound(p)."""
    values, gammas = _stationary_values(f, p, n_samples, rng, pool)
    beta = lsi_lower_bound(p)
    u = values**2
    mu = u.mean()
    # mean(u log(u/μ) − (u − μ)) is exactly the sample entropy.
    entropy = scipy.special.xlogy(u, u / mu) - (u - mu) if mu > 0 else np.zeros_like(u)
    margin = MCEstimate.from_samples(gammas / beta - entropy)
    return StaticCheck(f"lsi {f.name}", float(entropy.mean()), float(gammas.mean() / beta), margin, sigmas)


# --- Nested Monte Carlo of the semigroup ---

@dataclass(frozen=True)
class DecayConfig:
    t_grid: tuple[float, ...] = (0.5, 1.0)
    outer: int = 500
    inner: int = 2000
    dt: float = 1e-3
    sigmas: float = 3.0

    def __post_init__(self):
        grid = tuple(float(t) for t in self.t_grid)
        if not grid or any(t < 0 or not math.isfinite(t) for t in grid):
            raise ParameterError("must be a non-empty list of non-negative times", "t_grid")
        if any(later <= earlier for earlier, later in zip(grid, grid[1:])):
            raise ParameterError("times must be strictly increasing", "t_grid")
        object.__setattr__(self, "t_grid", grid)
        if self.outer < 2:
            raise ParameterError(f"must be at least 2, got {self.outer}", "outer")
        if self.inner < 2:
            raise ParameterError(f"must be at least 2, got {self.inner}", "inner")
        require_positive("dt", self.dt)
        require_positive("sigmas", self.sigmas)


@dataclass
class SemigroupSample:
    """f at the outer points, and per-point inner means and variances of f(Y_t)."""
    start: np.ndarray      # (outer,)
    means: np.ndarray      # (outer, len(t_grid))
    variances: np.ndarray  # (outer, len(t_grid))
    inner: int


def initial_sticks(p: ParamSeq, m: int, rng: RngStream) -> np.ndarray:
    """One interior stick vector drawn as φ⁻¹ of an exact Ξ_{a,b} sample; boundary draws are redrawn."""
    for attempt in range(1, MAX_REDRAWS + 1):
        y, remainder = p.sample_simplex(rng, 1, m)
        x, ok = phi_inverse_array(y, remainder)
        if ok[0] and np.all(x[0] > 0.0):
            return x[0]
        logger.debug("rejected boundary initial point on draw %d", attempt)
    raise BoundaryPoint(f"no interior initial point in {MAX_REDRAWS} draws", 1)


def sample_semigroup(f: CylinderFunction, p: ParamSeq, cfg: DecayConfig, rng: RngStream,
                     pool: TaskPool = SERIAL) -> SemigroupSample:
    """Estimate P_t f at ``cfg.outer`` stationary points; outer point ``i`` uses ``rng.substream(i)``."""
    m = _stationary_columns(f, p)
    grid = cfg.t_grid
    if m == 0:
        constant = float(f.value(np.zeros((1, 0)))[0])
        start = np.full(cfg.outer, constant)
        return SemigroupSample(start, np.full((cfg.outer, len(grid)), constant),
                               np.zeros((cfg.outer, len(grid))), cfg.inner)
    if np.min(p.b[:m]) < 0.5:
        warn_if_unsafe(p.b[:m])
    a, b = p.a[:m], p.b[:m]

    def task(_: int, stream: RngStream) -> tuple[float, np.ndarray, np.ndarray]:
        x0 = initial_sticks(p, m, stream)
        start = float(f.value(phi_array(x0)[0])[0])
        snapshots = evolve(np.tile(x0, (cfg.inner, 1)), a, b, grid, cfg.dt, stream)
        means = np.empty(len(grid))
        variances = np.empty(len(grid))
        for k, (t, state) in enumerate(zip(grid, snapshots)):
            if t == 0.0:
                means[k], variances[k] = start, 0.0
                continue
            values = f.value(phi_array(state)[0])
            means[k], variances[k] = values.mean(), values.var(ddof=1)
        return start, means, variances

    results = pool.map(task, cfg.outer, rng)
    return SemigroupSample(np.array([r[0] for r in results]), np.stack([r[1] for r in results]),
                           np.stack([r[2] for r in results]), cfg.inner)


@dataclass(frozen=True)
class DecayPoint:
    t: float
    estimate: MCEstimate
    envelope: float
    rate: MCEstimate
    passed: bool


@dataclass
class InequalityReport:
    constant_name: str
    analytic_bound: float
    t_grid: tuple[float, ...]
    points: list[DecayPoint]
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(point.passed for point in self.points)

    @property
    def empirical_rate(self) -> MCEstimate:
        """Decay rate measured up to the last positive grid time."""
        for point in reversed(self.points):
            if point.t > 0:
                return point.rate
        return MCEstimate(math.nan, math.nan)


def _estimate(influence: np.ndarray, value: float) -> MCEstimate:
    return MCEstimate(value, float(influence.std(ddof=1) / math.sqrt(influence.size)), influence.size)


def _log_ratio_rate(num: np.ndarray, num_value: float, den: np.ndarray, den_value: float,
                    scale: float) -> MCEstimate:
    """−log(num/den)/scale with a delta-method standard error from paired influences."""
    if num_value <= 0 or den_value <= 0:
        return MCEstimate(math.nan, math.nan, num.size)
    influence = (num / num_value - den / den_value) / scale
    rate = -math.log(num_value / den_value) / scale
    return MCEstimate(rate, float(influence.std(ddof=1) / math.sqrt(num.size)), num.size)


def _variance_influence(means: np.ndarray, variances: np.ndarray, inner: int) -> tuple[np.ndarray, float]:
    # Inner noise inflates the spread of P̂_t f by Var_inner / inner on average.
    n = means.size
    centered = means - means.mean()
    influence = centered**2 - variances / inner
    return influence, float((centered**2).sum() / (n - 1) - variances.mean() / inner)


def variance_decay_experiment(f: CylinderFunction, p: ParamSeq, cfg: DecayConfig, rng: RngStream,
                              pool: TaskPool = SERIAL) -> InequalityReport:
    """Var_Ξ(P_t f) against Var_Ξ(f)·e^{−2λt} with λ = inf(a_i + b_i)."""
    gap = poincare_bound(p)
    sample = sample_semigroup(f, p, cfg, rng, pool)
    zero = np.zeros_like(sample.start)
    base_influence, base = _variance_influence(sample.start, zero, sample.inner)
    if base <= 0:
        raise ParameterError(f"{f.name} is constant under the stationary law", "f")
    _require_precision("Var(f)", base, _estimate(base_influence, base).stderr)

    points = []
    for k, t in enumerate(cfg.t_grid):
        influence, value = _variance_influence(sample.means[:, k], sample.variances[:, k], sample.inner)
        estimate = _estimate(influence, value)
        _require_precision(f"Var(P_t f) at t={t:g}", value, estimate.stderr)
        envelope = base * math.exp(-2.0 * gap * t)
        if t == 0.0:
            points.append(DecayPoint(t, estimate, envelope, MCEstimate(math.nan, math.nan), True))
            continue
        rate = _log_ratio_rate(influence, value, base_influence, base, 2.0 * t)
        points.append(DecayPoint(t, estimate, envelope, rate, rate.mean >= gap - cfg.sigmas * rate.stderr))
    report = InequalityReport("poincare", gap, cfg.t_grid, points)
    logger.info("variance decay of %s: rate %.4g ± %.2g against gap %.4g",
                f.name, report.empirical_rate.mean, report.empirical_rate.stderr, gap)
    return report


def _entropy_influence(means: np.ndarray, variances: np.ndarray, inner: int) -> tuple[np.ndarray, float]:
    mu = means.mean()
    g = means / mu
    spread = variances / mu**2
    # Second-order correction of the plug-in u log u for inner noise.
    influence = scipy.special.xlogy(g, g) - (g - 1.0) - spread / (2.0 * inner * g)
    return influence, float(influence.mean())


def entropy_decay_experiment(f: CylinderFunction, p: ParamSeq, cfg: DecayConfig, rng: RngStream,
                             pool: TaskPool = SERIAL) -> InequalityReport:
    """Ent_Ξ(P_t f) against the log-Sobolev envelope, for f bounded away from zero.

    The decay constant of the envelope is quoted both as e^{−4βt} and e^{−βt};
    the pass flag uses the smaller rate β.
    """
    beta = lsi_lower_bound(p)
    sample = sample_semigroup(f, p, cfg, rng, pool)
    if np.any(sample.start <= 0):
        raise ParameterError(f"{f.name} must be strictly positive", "f")
    zero = np.zeros_like(sample.start)
    base_influence, base = _entropy_influence(sample.start, zero, sample.inner)

    points = []
    for k, t in enumerate(cfg.t_grid):
        influence, value = _entropy_influence(sample.means[:, k], sample.variances[:, k], sample.inner)
        estimate = _estimate(influence, value)
        if base > 0:
            _require_precision(f"Ent(P_t f) at t={t:g}", value, estimate.stderr)
        envelope = base * math.exp(-beta * t)
        rate = MCEstimate(math.nan, math.nan) if t == 0.0 else _log_ratio_rate(influence, value, base_influence, base, t)
        points.append(DecayPoint(t, estimate, envelope, rate, value <= envelope + cfg.sigmas * estimate.stderr))

    strict = [base * math.exp(-4.0 * beta * t) for t in cfg.t_grid]
    note = (f"envelope rate: e^(-4*beta*t) gives {', '.join(f'{e:.4g}' for e in strict)}; "
            f"pass uses e^(-beta*t) with beta={beta:.6g}")
    logger.info("entropy decay of %s: %s", f.name, note)
    return InequalityReport("log-sobolev", beta, cfg.t_grid, points, [note])


def eigen_mean_decay(p: ParamSeq, cfg: DecayConfig, rng: RngStream, pool: TaskPool = SERIAL) -> list[DecayPoint]:
    """E_y[h(Y_t)] = e^{−(a_1+b_1)t} h(y) for h(y) = a_1 − (a_1+b_1) y_1.

    The ratio Σ P̂_t h · h / Σ h² over the outer points is compared with
    e^{−(a_1+b_1)t}, allowing an Euler bias of c²·dt·t on top of the noise.
    """
    c = float(p.rates[0])
    h = PolynomialCylinder({(): float(p.a[0]), (1,): -c}, name="h(y1)")
    sample = sample_semigroup(h, p, cfg, rng, pool)
    start = sample.start
    norm = float(np.sum(start**2))
    points = []
    for k, t in enumerate(cfg.t_grid):
        means = sample.means[:, k]
        ratio = float(np.sum(means * start) / norm)
        residual = means - ratio * start
        stderr = float(math.sqrt(np.sum(start**2 * residual**2)) / norm)
        predicted = math.exp(-c * t)
        estimate = MCEstimate(ratio, stderr, start.size)
        points.append(DecayPoint(t, estimate, predicted, MCEstimate(c, 0.0),
                                 estimate.within(predicted, cfg.sigmas, c * c * cfg.dt * t)))
    return points


def decay_grid(values: Sequence[float]) -> tuple[float, ...]:
    """Sorted, de-duplicated grid with 0 prepended, as the nested runs expect."""
    return tuple(sorted({0.0, *(float(v) for v in values)}))
