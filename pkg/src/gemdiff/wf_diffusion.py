"""One-dimensional Wright–Fisher diffusion.

    dX = (a − (a+b)X) dt + sqrt(X(1−X)) dB,    X(0) ∈ [0, 1]

Integrated with Euler–Maruyama and clamped to [0, 1] after every step. The
diffusion coefficient vanishes at both ends so boundary excursions are O(dt);
clamping keeps the state space at an O(dt) bias. The stationary law is
Beta(2a, 2b), the scale function diverges at 1 when b ≥ 1/2, and the linear
function h(x) = a − (a+b)x is an eigenfunction with eigenvalue −(a+b).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.special
import scipy.stats

from .core import MCEstimate, ParameterError, require_positive
from .parallel import SERIAL, TaskPool
from .rng import RngStream

logger = logging.getLogger(__name__)

SCALE_RTOL = 1e-8


class ScaleQuadratureError(ArithmeticError):
    def __init__(self, message: str, x: float):
        self.x = x
        super().__init__(f"{message} at x={x!r}")


@dataclass(frozen=True)
class WFParams:
    a: float
    b: float

    def __post_init__(self):
        require_positive("a", self.a)
        require_positive("b", self.b)

    @property
    def boundary_safe(self) -> bool:
        """True when the boundary 1 is inaccessible (b ≥ 1/2)."""
        return self.b >= 0.5

    @property
    def rate(self) -> float:
        return self.a + self.b

    @property
    def stationary_mean(self) -> float:
        return self.a / (self.a + self.b)


@dataclass(frozen=True)
class WFState:
    x: float

    def __post_init__(self):
        if not 0.0 <= self.x <= 1.0:
            raise ParameterError(f"must lie in [0, 1], got {self.x!r}", "x")


@dataclass(frozen=True)
class SimConfig:
    dt: float
    horizon: float
    seed: int = 0
    n_paths: int = 1

    def __post_init__(self):
        require_positive("dt", self.dt)
        if not (self.horizon >= 0 and math.isfinite(self.horizon)):
            raise ParameterError(f"must be finite and non-negative, got {self.horizon!r}", "horizon")
        if 0 < self.horizon < self.dt:
            raise ParameterError(f"dt={self.dt} exceeds horizon={self.horizon}", "dt")
        if self.n_paths < 1:
            raise ParameterError(f"must be at least 1, got {self.n_paths}", "n_paths")

    @property
    def steps(self) -> int:
        return step_count(self.horizon, self.dt)


def step_count(span: float, dt: float) -> int:
    # A relative guard keeps 1.0/1e-3 from rounding up to 1001 steps.
    return max(0, math.ceil(span / dt - 1e-9))


def warn_if_unsafe(b) -> None:
    b_min = float(np.min(b))
    if b_min < 0.5:
        logger.warning("b=%g < 1/2: the boundary 1 is accessible; paths are clamped to [0, 1]", b_min)


# --- Integrator ---

def wf_step_array(x: np.ndarray, a, b, dt: float, z: np.ndarray) -> np.ndarray:
    """Vectorized Euler–Maruyama step; ``a`` and ``b`` broadcast against ``x``."""
    drift = a - (a + b) * x
    diffusion = np.sqrt(np.clip(x * (1.0 - x), 0.0, None))
    return np.clip(x + drift * dt + diffusion * math.sqrt(dt) * z, 0.0, 1.0)


def wf_step(state: WFState, p: WFParams, dt: float, z: float) -> WFState:
    require_positive("dt", dt)
    x = float(wf_step_array(np.float64(state.x), p.a, p.b, dt, np.float64(z)))
    return WFState(x)


def evolve(x: np.ndarray, a, b, t_grid: Sequence[float], dt: float, rng: RngStream,
           on_step: Callable[[np.ndarray, float], None] | None = None) -> list[np.ndarray]:
    """Integrate every entry of ``x`` independently and snapshot at each time of ``t_grid``.

    ``t_grid`` must be non-decreasing and start at or after 0. Each segment
    between grid times is split into ⌈Δt/dt⌉ equal steps. ``on_step`` is
    called after every step with the state and the step size, which lets the
    measure-valued process advance its types in lockstep.
    """
    require_positive("dt", dt)
    state = np.array(x, dtype=float, copy=True)
    snapshots = []
    now = 0.0
    for t in t_grid:
        if t < now:
            raise ParameterError(f"time grid must be non-decreasing, got {t} after {now}", "t_grid")
        steps = step_count(t - now, dt)
        if steps:
            h = (t - now) / steps
            for _ in range(steps):
                state = wf_step_array(state, a, b, h, rng.normal(state.shape))
                if on_step is not None:
                    on_step(state, h)
        now = t
        snapshots.append(state.copy())
    return snapshots


@dataclass
class WFRun:
    endpoints: np.ndarray
    times: np.ndarray | None = None
    path: np.ndarray | None = None  # shape (len(times), n_paths)


def wf_simulate(x0: WFState, p: WFParams, cfg: SimConfig, rng: RngStream,
                sample_times: Sequence[float] | None = None, pool: TaskPool = SERIAL) -> WFRun:
    """Simulate ``cfg.n_paths`` independent paths from ``x0`` up to ``cfg.horizon``.

    Paths are cut into chunks of ``pool.chunk_size``; chunk ``i`` draws from
    ``rng.substream(i)``.
    """
    if not p.boundary_safe:
        warn_if_unsafe(p.b)
    times = sorted({*(sample_times or ()), cfg.horizon})
    if times and times[-1] > cfg.horizon:
        raise ParameterError(f"sample time {times[-1]} beyond horizon {cfg.horizon}", "sample_times")

    def run_chunk(size: int, stream: RngStream) -> np.ndarray:
        return np.stack(evolve(np.full(size, x0.x), p.a, p.b, times, cfg.dt, stream))

    chunks = pool.map_chunks(run_chunk, cfg.n_paths, rng)
    path = np.concatenate(chunks, axis=1)
    run = WFRun(endpoints=path[-1])
    if sample_times:
        run.times = np.asarray(times)
        run.path = path
    return run


# --- Stationary law and analytic predictors ---

def stationary_sample(p: WFParams, rng: RngStream, size=None):
    """Exact draw(s) from Beta(2a, 2b)."""
    return rng.beta(2.0 * p.a, 2.0 * p.b, size)


def stationary_law(p: WFParams):
    return scipy.stats.beta(2.0 * p.a, 2.0 * p.b)


def stationary_cdf(p: WFParams, x):
    return stationary_law(p).cdf(x)


def stationary_density(p: WFParams, x):
    return stationary_law(p).pdf(x)


def scale_function(p: WFParams, x: float) -> float:
    """s(x) = (1/4)^(a+b) ∫_{1/2}^x y^(−2a) (1−y)^(−2b) dy.

    Integrated in the logit variable u = log(y/(1−y)), where dy = y(1−y) du
    and the integrand y^(1−2a)(1−y)^(1−2b) stays bounded for a, b ≥ 1/2.
    """
    if not 0.0 < x < 1.0:
        raise ParameterError(f"must lie in (0, 1), got {x!r}", "x")
    if x == 0.5:
        return 0.0

    def integrand(u: float) -> float:
        log_y = scipy.special.log_expit(u)
        log_1my = scipy.special.log_expit(-u)
        return math.exp((1.0 - 2.0 * p.a) * log_y + (1.0 - 2.0 * p.b) * log_1my)

    upper = float(scipy.special.logit(x))
    value, abserr, info, *message = scipy.integrate.quad(
        integrand, 0.0, upper, epsabs=0.0, epsrel=SCALE_RTOL, limit=500, full_output=1)
    if message or abserr > SCALE_RTOL * abs(value):
        reason = message[0].strip().splitlines()[0] if message else f"error estimate {abserr:.3g}"
        raise ScaleQuadratureError(f"scale quadrature did not converge ({reason}, {info['neval']} evaluations)", x)
    return 0.25 ** (p.a + p.b) * value


def linear_eigen_prediction(p: WFParams, x0: float, t: float) -> float:
    """E_x0[h(X_t)] = e^{−(a+b)t} h(x0) for h(x) = a − (a+b)x."""
    if t < 0:
        raise ParameterError(f"must be non-negative, got {t!r}", "t")
    return math.exp(-p.rate * t) * (p.a - p.rate * x0)


def eigenfunction(p: WFParams, x):
    return p.a - p.rate * np.asarray(x)


def reversibility_gap(p: WFParams, f: Callable[[np.ndarray], np.ndarray], g: Callable[[np.ndarray], np.ndarray],
                      t: float, cfg: SimConfig, rng: RngStream, pool: TaskPool = SERIAL) -> MCEstimate:
    """Paired estimate of E[f(X_0)g(X_t)] − E[g(X_0)f(X_t)] with X_0 ~ Beta(2a, 2b).

    Zero for a reversible process; the paired form cancels most of the noise
    shared by the two terms.
    """
    if not p.boundary_safe:
        warn_if_unsafe(p.b)

    def run_chunk(size: int, stream: RngStream) -> np.ndarray:
        x0 = np.asarray(stationary_sample(p, stream, size))
        (xt,) = evolve(x0, p.a, p.b, [t], cfg.dt, stream)
        return f(x0) * g(xt) - g(x0) * f(xt)

    return MCEstimate.from_samples(np.concatenate(pool.map_chunks(run_chunk, cfg.n_paths, rng)))
