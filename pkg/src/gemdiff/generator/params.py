"""Parameter sequences (a_i, b_i) of the product Wright–Fisher process.

The stick coordinates X_i are independent Wright–Fisher diffusions with
parameters (a_i, b_i); their product stationary law μ_{a,b} = ⊗ Beta(2a_i, 2b_i)
is pushed through φ to the simplex law Ξ_{a,b}. GEM laws are the special
cases a_i = 1/2, b_i = θ/2 and a_i = (1−α)/2, b_i = (θ + iα)/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import ParameterError
from ..rng import RngStream
from ..stick_breaking import GEMParams, phi_array
from ..wf_diffusion import WFParams


@dataclass(frozen=True, eq=False)
class ParamSeq:
    """First ``n`` pairs of an infinite parameter sequence.

    ``tail_min`` and ``tail_rate`` record inf_{i>n}(a_i ∧ b_i) and
    inf_{i>n}(a_i + b_i) of the untruncated sequence; ``None`` means the
    truncation is taken to be the whole sequence.
    """
    a: np.ndarray
    b: np.ndarray
    tail_min: float | None = None
    tail_rate: float | None = None

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 1 or a.shape != b.shape or a.size == 0:
            raise ParameterError(f"a and b must be non-empty sequences of equal length, got {a.shape} and {b.shape}", "a")
        for name, values in (("a", a), ("b", b)):
            if not np.all(np.isfinite(values) & (values > 0)):
                raise ParameterError("every entry must be finite and strictly positive", name)
        for name in ("tail_min", "tail_rate"):
            value = getattr(self, name)
            if value is not None and not (value >= 0 and math.isfinite(value)):
                raise ParameterError(f"must be finite and non-negative, got {value!r}", name)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    # --- Constructors ---

    @classmethod
    def constant(cls, a: float, b: float, n: int) -> ParamSeq:
        return cls(np.full(n, float(a)), np.full(n, float(b)), min(a, b), a + b)

    @classmethod
    def one_parameter(cls, theta: float, n: int) -> ParamSeq:
        """a_i = 1/2, b_i = θ/2: stationary law GEM(θ)."""
        GEMParams(theta=theta)
        return cls.constant(0.5, theta / 2.0, n)

    @classmethod
    def two_parameter(cls, alpha: float, theta: float, n: int) -> ParamSeq:
        """a_i = (1−α)/2, b_i = (θ + iα)/2: stationary law GEM(α, θ)."""
        GEMParams(theta=theta, alpha=alpha)
        i = np.arange(1, n + 1, dtype=float)
        a = np.full(n, (1.0 - alpha) / 2.0)
        b = (theta + i * alpha) / 2.0
        # b_i is non-decreasing in i, so the tail infima sit at i = n + 1.
        b_next = (theta + (n + 1) * alpha) / 2.0
        return cls(a, b, min(a[0], b_next), a[0] + b_next)

    @classmethod
    def from_gem(cls, p: GEMParams, n: int) -> ParamSeq:
        return cls.two_parameter(p.alpha, p.theta, n)

    @classmethod
    def from_sequences(cls, a, b, tail_min: float | None = None, tail_rate: float | None = None) -> ParamSeq:
        return cls(np.asarray(a, dtype=float), np.asarray(b, dtype=float), tail_min, tail_rate)

    # --- Queries ---

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def rates(self) -> np.ndarray:
        return self.a + self.b

    def coordinate(self, i: int) -> WFParams:
        return WFParams(float(self.a[i]), float(self.b[i]))

    @property
    def inf_min_ab(self) -> float:
        """inf_i (a_i ∧ b_i), including the untruncated tail when known."""
        head = float(np.min(np.minimum(self.a, self.b)))
        return head if self.tail_min is None else min(head, self.tail_min)

    @property
    def inf_rate(self) -> float:
        """inf_i (a_i + b_i), including the untruncated tail when known."""
        head = float(np.min(self.rates))
        return head if self.tail_rate is None else min(head, self.tail_rate)

    @property
    def boundary_safe(self) -> bool:
        return bool(np.all(self.b >= 0.5))

    def truncate(self, m: int) -> ParamSeq:
        if not 1 <= m <= self.n:
            raise ParameterError(f"must lie in [1, {self.n}], got {m}", "m")
        if m == self.n:
            return self
        dropped_min = float(np.min(np.minimum(self.a[m:], self.b[m:])))
        dropped_rate = float(np.min(self.rates[m:]))
        tail_min = dropped_min if self.tail_min is None else min(dropped_min, self.tail_min)
        tail_rate = dropped_rate if self.tail_rate is None else min(dropped_rate, self.tail_rate)
        return ParamSeq(self.a[:m], self.b[:m], tail_min, tail_rate)

    # --- Exact stationary samplers ---

    def sample_sticks(self, rng: RngStream, size: int, m: int | None = None) -> np.ndarray:
        """``size`` rows from μ_{a,b} restricted to the first ``m`` coordinates."""
        m = self.n if m is None else m
        return rng.beta(2.0 * self.a[:m], 2.0 * self.b[:m], (size, m))

    def sample_simplex(self, rng: RngStream, size: int, m: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """``(y, remainder)`` rows from Ξ_{a,b}; the remainder is the mass beyond coordinate ``m``."""
        return phi_array(self.sample_sticks(rng, size, m))
