"""Coefficients a_ij(y), b_i(y) of the GEM generator on the simplex.

With T_k = 1 − Σ_{l<k} y_l (T_1 = 1) and S_i = Σ_{k<i} y_k / T_{k+1}, the
displayed sums cancel to

    a_ii = y_i² S_i + y_i T_{i+1}
    a_ij = y_i y_j (S_{i∧j} − 1)                       (i ≠ j)
    b_i  = d_i − y_i Σ_{k<i} d_k / T_{k+1},     d_k = a_k T_k − (a_k + b_k) y_k

The only ratios left are y_i / T_{k+1} with i > k. Since T_{k+1} ≥ y_i, a
vanishing denominator forces a vanishing numerator and the ratio is read as
1. Every T_k comes from the remainder chain in ``tail_masses``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..core import ParameterError
from ..stick_breaking import SimplexPoint, tail_masses
from .params import ParamSeq

COEFF_BOUND = 3.0
BOUND_SLACK = 1e-9
PSD_TOLERANCE = 1e-10


class Normalization(Enum):
    """Weight of the second-order part of ℒ and Γ.

    UNIT is Σ a_ij ∂_ij + Σ b_i ∂_i with the coefficients as written. ITO halves
    the second-order part; it is the generator of Φ(X) for the simulated SDE
    and the one for which Ξ(Γ(f, g)) = −Ξ(f ℒ g).
    """
    UNIT = "unit"
    ITO = "ito"

    @property
    def weight(self) -> float:
        return 1.0 if self is Normalization.UNIT else 0.5


def _prefix(y: np.ndarray, m: int | None) -> int:
    n = y.shape[-1]
    m = n if m is None else m
    if not 1 <= m <= n:
        raise ParameterError(f"must lie in [1, {n}], got {m}", "m")
    return m


def diffusion_matrix(y: np.ndarray, remainder, m: int | None = None) -> np.ndarray:
    """a_ij for i, j < m on a batch of points; shape ``y.shape[:-1] + (m, m)``.

    ``y`` may hold only the leading coordinates as long as ``remainder`` is
    the mass beyond them.
    """
    y = np.asarray(y, dtype=float)
    m = _prefix(y, m)
    tails = tail_masses(y, remainder)
    head = y[..., :m]
    t_next = tails[..., 1:m + 1]
    ratio = np.divide(head, t_next, out=np.zeros_like(head), where=t_next > 0)
    s = np.cumsum(ratio, axis=-1) - ratio
    idx = np.arange(m)
    s_min = s[..., np.minimum.outer(idx, idx)]
    matrix = head[..., :, None] * head[..., None, :] * (s_min - 1.0)
    matrix[..., idx, idx] = head**2 * s + head * t_next
    return matrix


def drift_vector(y: np.ndarray, remainder, p: ParamSeq, m: int | None = None) -> np.ndarray:
    """b_i for i < m on a batch of points."""
    y = np.asarray(y, dtype=float)
    m = _prefix(y, m)
    if p.n < m:
        raise ParameterError(f"parameter sequence has {p.n} entries, {m} needed", "p")
    tails = tail_masses(y, remainder)
    head = y[..., :m]
    t_here = tails[..., :m]
    t_next = tails[..., 1:m + 1]
    d = p.a[:m] * t_here - p.rates[:m] * head
    positive = t_next > 0
    scaled = np.divide(d, t_next, out=np.zeros_like(d), where=positive)
    # 0/0 terms: y_i / T_{k+1} = 1, so d_k enters unscaled.
    unscaled = np.where(positive, 0.0, d)
    before_scaled = np.cumsum(scaled, axis=-1) - scaled
    before_unscaled = np.cumsum(unscaled, axis=-1) - unscaled
    return d - head * before_scaled - before_unscaled


# --- Pointwise API ---

def _check_index(y: SimplexPoint, i: int) -> None:
    if not 0 <= i < len(y):
        raise ParameterError(f"index {i} outside 0..{len(y) - 1}", "i")


def coeff_a(y: SimplexPoint, i: int, j: int) -> float:
    """a_ij(y) with zero-based indices."""
    _check_index(y, i)
    _check_index(y, j)
    m = max(i, j) + 1
    return float(diffusion_matrix(y.y, y.remainder, m)[i, j])


def coeff_b(y: SimplexPoint, p: ParamSeq, i: int) -> float:
    """b_i(y) with a zero-based index."""
    _check_index(y, i)
    return float(drift_vector(y.y, y.remainder, p, i + 1)[i])


@dataclass(frozen=True, eq=False)
class GeneratorCoeffs:
    a: np.ndarray
    b: np.ndarray

    @property
    def n(self) -> int:
        return self.b.size

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.a)[0])

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.a, self.a.T))

    def is_psd(self, tol: float = PSD_TOLERANCE) -> bool:
        return self.min_eigenvalue >= -tol


def generator_coeffs(y: SimplexPoint, p: ParamSeq, m: int | None = None) -> GeneratorCoeffs:
    return GeneratorCoeffs(diffusion_matrix(y.y, y.remainder, m), drift_vector(y.y, y.remainder, p, m))


@dataclass(frozen=True)
class BoundCheck:
    value: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.value <= self.bound + BOUND_SLACK


def coeff_bound_array(y: np.ndarray, remainder) -> np.ndarray:
    return np.abs(diffusion_matrix(y, remainder)).sum(axis=(-2, -1))


def coeff_bound(y: SimplexPoint) -> BoundCheck:
    """Σ_{i,j≤n} |a_ij(y)|, checked against 3."""
    return BoundCheck(float(coeff_bound_array(y.y, y.remainder)), COEFF_BOUND)


def drift_bound_array(y: np.ndarray, p: ParamSeq) -> np.ndarray:
    """Σ_{k≤i} (b_k y_k + a_k) for every i."""
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    return np.cumsum(p.b[:n] * y + p.a[:n], axis=-1)


def drift_bound(y: SimplexPoint, p: ParamSeq) -> list[BoundCheck]:
    """|b_i(y)| against Σ_{k≤i}(b_k y_k + a_k), one check per coordinate."""
    values = np.abs(drift_vector(y.y, y.remainder, p))
    bounds = drift_bound_array(y.y, p)
    return [BoundCheck(float(v), float(b)) for v, b in zip(values, bounds)]
