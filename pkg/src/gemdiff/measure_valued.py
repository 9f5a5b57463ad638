"""Measure-valued process η_t = Σ_i Y_i(t) δ_{ξ_i(t)}.

The weights are Φ of the product Wright–Fisher sticks; the types ξ_i follow
independent parent-independent mutation: each jumps at rate θ/2 to a fresh
draw from ν. The pair (X, ξ) is Markov and is the only thing simulated; η is
always obtained by pushing it forward.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ParameterError, require_positive
from .generator.params import ParamSeq
from .parallel import SERIAL, TaskPool
from .rng import RngStream
from .stick_breaking import DiscreteMeasure, SimplexPoint, TypeSampler, phi_array, uniform_types
from .wf_diffusion import SimConfig, evolve, warn_if_unsafe

logger = logging.getLogger(__name__)

REMAINDER_WARNING = 1e-3


@dataclass(frozen=True, eq=False)
class TypeVector:
    xi: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        if xi.ndim != 1 or not np.all(np.isfinite(xi)):
            raise ParameterError("must be a one-dimensional sequence of finite types", "xi")
        object.__setattr__(self, "xi", xi)

    def __len__(self) -> int:
        return self.xi.size


@dataclass(frozen=True, eq=False)
class EtaState:
    weights: SimplexPoint
    types: TypeVector

    def __post_init__(self):
        if len(self.weights) != len(self.types):
            raise ParameterError(f"{len(self.weights)} weights but {len(self.types)} types", "types")


# --- Mutation ---

def jump_probability(theta: float, dt: float) -> float:
    """Probability that a rate-θ/2 jump clock rings within ``dt``."""
    if theta < 0 or not math.isfinite(theta):
        raise ParameterError(f"must be finite and non-negative, got {theta!r}", "theta")
    if not dt > 0:
        raise ParameterError(f"must be positive, got {dt!r}", "dt")
    return -math.expm1(-0.5 * theta * dt)


def mutation_step_array(types: np.ndarray, theta: float, nu: TypeSampler, dt: float,
                        rng: RngStream) -> np.ndarray:
    """Refresh every entry of ``types`` from ν independently with the jump probability of ``dt``."""
    chance = jump_probability(theta, dt)
    # Draw both arrays every step so the stream advances the same way for any θ.
    jumps = rng.uniform(types.shape) < chance
    fresh = nu(rng, types.shape)
    return np.where(jumps, fresh, types)


def mutation_step(types: TypeVector, theta: float, nu: TypeSampler, dt: float, rng: RngStream) -> TypeVector:
    return TypeVector(mutation_step_array(types.xi, theta, nu, dt, rng))


# --- Pushforward and integration ---

def pushforward_psi(state: EtaState) -> DiscreteMeasure:
    """ψ(y, ξ) = Σ y_i δ_{ξ_i}; coincident types stay separate atoms."""
    return DiscreteMeasure(state.weights.y, state.types.xi, state.weights.remainder)


def integrate_array(weights: np.ndarray, types: np.ndarray, g: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Row-wise ⟨η, g⟩ = Σ_i w_i g(s_i)."""
    return np.sum(np.asarray(weights) * g(np.asarray(types)), axis=-1)


class Integral(float):
    """⟨m, g⟩ together with the remainder mass it leaves out.

    Behaves as the plain value in arithmetic; ``remainder`` is the unassigned
    mass and ``bias_bound(sup_g)`` the resulting worst-case error.
    """

    remainder: float

    def __new__(cls, value: float, remainder: float) -> Integral:
        integral = super().__new__(cls, value)
        integral.remainder = float(remainder)
        return integral

    def bias_bound(self, sup_g: float = 1.0) -> float:
        return abs(sup_g) * self.remainder

    def __repr__(self) -> str:
        return f"Integral({float(self)!r}, remainder={self.remainder!r})"


def integrate(m: DiscreteMeasure, g: Callable[[np.ndarray], np.ndarray]) -> Integral:
    """Σ w_i g(s_i); the remainder mass contributes nothing and is returned alongside."""
    if m.remainder > REMAINDER_WARNING:
        logger.warning("remainder %.3g exceeds %g; ⟨η, g⟩ is off by up to ‖g‖·%.3g",
                       m.remainder, REMAINDER_WARNING, m.remainder)
    return Integral(float(integrate_array(m.weights, m.types, g)), m.remainder)


def dirichlet_moments(theta: float, nu_g: float, nu_g2: float) -> tuple[float, float]:
    """Mean ν(g) and variance (ν(g²) − ν(g)²)/(1+θ) of ⟨Θ, g⟩ for Θ ~ Dirichlet(θ, ν)."""
    require_positive("theta", theta)
    return nu_g, (nu_g2 - nu_g**2) / (1.0 + theta)


# --- Simulation ---

@dataclass(frozen=True, eq=False)
class EtaSnapshot:
    t: float
    measure: DiscreteMeasure


@dataclass
class EtaEnsemble:
    """Snapshots of many independent paths; arrays are indexed (time, path, coordinate)."""
    times: np.ndarray
    weights: np.ndarray
    types: np.ndarray
    remainder: np.ndarray

    def integrate(self, g: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """⟨η_t, g⟩ with shape (time, path)."""
        return integrate_array(self.weights, self.types, g)


def _sample_times(cfg: SimConfig, sample_times: Sequence[float] | None) -> list[float]:
    times = sorted({0.0, *(sample_times or ()), cfg.horizon})
    if times[0] < 0 or times[-1] > cfg.horizon:
        raise ParameterError(f"sample times must lie in [0, {cfg.horizon}]", "sample_times")
    return times


def evolve_eta(x: np.ndarray, types: np.ndarray, p: ParamSeq, theta_mut: float, nu: TypeSampler,
               times: Sequence[float], dt: float, rng: RngStream) -> list[tuple[np.ndarray, np.ndarray]]:
    """Advance sticks and types together; one mutation step follows every Wright–Fisher step."""
    n = x.shape[-1]
    state = {"types": np.array(types, dtype=float, copy=True)}

    def mutate(_: np.ndarray, h: float) -> None:
        state["types"] = mutation_step_array(state["types"], theta_mut, nu, h, rng)

    snapshots = []
    now = 0.0
    for t in times:
        if t > now:
            (x,) = evolve(x, p.a[:n], p.b[:n], [t - now], dt, rng, on_step=mutate)
            now = t
        snapshots.append((x.copy(), state["types"].copy()))
    return snapshots


def _initial_state(p: ParamSeq, nu: TypeSampler, rng: RngStream, size: int,
                   x0: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    if x0 is None:
        x = p.sample_sticks(rng, size)
    else:
        x = np.tile(np.asarray(x0, dtype=float), (size, 1))
    return x, nu(rng, x.shape)


def simulate_eta_ensemble(cfg: SimConfig, p: ParamSeq, theta_mut: float, rng: RngStream,
                          nu: TypeSampler = uniform_types, sample_times: Sequence[float] | None = None,
                          x0: np.ndarray | None = None, pool: TaskPool = SERIAL) -> EtaEnsemble:
    """Simulate ``cfg.n_paths`` independent copies of η, started from the stationary sticks unless ``x0`` is given.

    Initial types are i.i.d. ν. Paths are chunked by ``pool.chunk_size``.
    """
    if not p.boundary_safe:
        warn_if_unsafe(p.b)
    times = _sample_times(cfg, sample_times)

    def run_chunk(size: int, stream: RngStream) -> tuple[np.ndarray, np.ndarray]:
        x, types = _initial_state(p, nu, stream, size, x0)
        snapshots = evolve_eta(x, types, p, theta_mut, nu, times, cfg.dt, stream)
        return np.stack([s[0] for s in snapshots]), np.stack([s[1] for s in snapshots])

    chunks = pool.map_chunks(run_chunk, cfg.n_paths, rng)
    sticks = np.concatenate([c[0] for c in chunks], axis=1)
    weights, remainder = phi_array(sticks)
    return EtaEnsemble(np.asarray(times), weights, np.concatenate([c[1] for c in chunks], axis=1), remainder)


def simulate_eta(cfg: SimConfig, p: ParamSeq, theta_mut: float, rng: RngStream,
                 nu: TypeSampler = uniform_types, sample_times: Sequence[float] | None = None,
                 x0: np.ndarray | None = None) -> list[EtaSnapshot]:
    """One path of η, pushed forward at every sample time (0 and the horizon included)."""
    if not p.boundary_safe:
        warn_if_unsafe(p.b)
    times = _sample_times(cfg, sample_times)
    x, types = _initial_state(p, nu, rng, 1, x0)
    path = []
    for t, (sticks, xi) in zip(times, evolve_eta(x, types, p, theta_mut, nu, times, cfg.dt, rng)):
        weights, remainder = phi_array(sticks[0])
        state = EtaState(SimplexPoint(weights, float(remainder)), TypeVector(xi[0]))
        path.append(EtaSnapshot(t, pushforward_psi(state)))
    return path


# --- JSON lines ---

def write_snapshots(path: Path, snapshots: Iterable[EtaSnapshot]) -> None:
    with open(path, "w") as f:
        for snap in snapshots:
            record = {"t": snap.t, "atoms": [list(atom) for atom in snap.measure.atoms()],
                      "remainder": snap.measure.remainder}
            f.write(json.dumps(record) + "\n")


def read_snapshots(path: Path) -> list[EtaSnapshot]:
    snapshots = []
    with open(path) as f:
        for line in f:
            if not line.strip():
                continue
            record = json.loads(line)
            atoms = record["atoms"]
            weights = [w for w, _ in atoms]
            types = [s for _, s in atoms]
            snapshots.append(EtaSnapshot(float(record["t"]), DiscreteMeasure(weights, types, float(record["remainder"]))))
    return snapshots
