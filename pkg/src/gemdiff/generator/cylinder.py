"""Cylinder test functions: smooth functions of finitely many coordinates.

Every function works on a batch of points stored row-wise and only looks at
its first ``n`` columns. Polynomials carry exact derivatives; generic
functions fall back to central differences with step 1e−5.
"""

from __future__ import annotations

import itertools
from abc import ABC, abstractmethod
from collections.abc import Callable, Mapping

import numpy as np

from ..core import ParameterError
from ..rng import RngStream

FD_STEP = 1e-5

# Bump when the fixed batteries below change, so stored reports stay comparable.
BATTERY_VERSION = 1


class CylinderFunction(ABC):
    n: int
    name: str

    @abstractmethod
    def value(self, y: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def gradient(self, y: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def hessian(self, y: np.ndarray) -> np.ndarray: ...

    def __call__(self, y: np.ndarray) -> np.ndarray:
        return self.value(y)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name})"

    def _columns(self, y: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if y.shape[-1] < self.n:
            raise ParameterError(f"{self.name} needs {self.n} coordinates, got {y.shape[-1]}", "y")
        return y[..., :self.n]


class PolynomialCylinder(CylinderFunction):
    """Σ c · ∏ y_i^{e_i} with exponent tuples padded to a common length."""

    def __init__(self, terms: Mapping[tuple[int, ...], float], name: str = ""):
        width = max((len(e) for e in terms), default=0)
        merged: dict[tuple[int, ...], float] = {}
        for exponents, coeff in terms.items():
            if any(e < 0 for e in exponents):
                raise ParameterError(f"negative exponent in {exponents}", "terms")
            key = tuple(exponents) + (0,) * (width - len(exponents))
            merged[key] = merged.get(key, 0.0) + float(coeff)
        self.terms = {e: c for e, c in merged.items() if c != 0.0}
        # n is the last coordinate that actually appears.
        self.n = max((i + 1 for e in self.terms for i, k in enumerate(e) if k), default=0)
        self.terms = {e[:self.n]: c for e, c in self.terms.items()}
        self.name = name or self._describe()

    @classmethod
    def coordinate(cls, i: int) -> PolynomialCylinder:
        """y_{i+1} (``i`` is zero-based)."""
        return cls({(0,) * i + (1,): 1.0}, name=f"y{i + 1}")

    @classmethod
    def constant(cls, c: float) -> PolynomialCylinder:
        return cls({(): c}, name=f"{c:g}")

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def _describe(self) -> str:
        parts = []
        for exponents, coeff in sorted(self.terms.items()):
            factors = [f"y{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(exponents) if k]
            monomial = "*".join(factors)
            if not monomial:
                parts.append(f"{coeff:g}")
            elif coeff == 1.0:
                parts.append(monomial)
            else:
                parts.append(f"{coeff:g}*{monomial}")
        return "+".join(parts) or "0"

    def __add__(self, other: PolynomialCylinder | float) -> PolynomialCylinder:
        if not isinstance(other, PolynomialCylinder):
            other = PolynomialCylinder.constant(float(other))
        terms: dict[tuple[int, ...], float] = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return PolynomialCylinder(terms)

    __radd__ = __add__

    def __mul__(self, scalar: float) -> PolynomialCylinder:
        return PolynomialCylinder({e: c * scalar for e, c in self.terms.items()})

    __rmul__ = __mul__

    def _power(self, y: np.ndarray, exponents: tuple[int, ...]) -> np.ndarray:
        return np.prod(y ** np.asarray(exponents, dtype=float), axis=-1) if exponents else np.ones(y.shape[:-1])

    def value(self, y):
        y = self._columns(y)
        total = np.zeros(y.shape[:-1])
        for exponents, coeff in self.terms.items():
            total += coeff * self._power(y, exponents)
        return total

    def gradient(self, y):
        y = self._columns(y)
        grad = np.zeros(y.shape)
        for exponents, coeff in self.terms.items():
            for i, k in enumerate(exponents):
                if k == 0:
                    continue
                lowered = list(exponents)
                lowered[i] -= 1
                grad[..., i] += coeff * k * self._power(y, tuple(lowered))
        return grad

    def hessian(self, y):
        y = self._columns(y)
        hess = np.zeros(y.shape + (self.n,))
        for exponents, coeff in self.terms.items():
            for i, j in itertools.product(range(self.n), repeat=2):
                lowered = list(exponents)
                factor = lowered[i]
                lowered[i] -= 1
                factor *= lowered[j]
                lowered[j] -= 1
                if factor > 0:
                    hess[..., i, j] += coeff * factor * self._power(y, tuple(lowered))
        return hess


class GenericCylinder(CylinderFunction):
    """Any vectorized callable of the first ``n`` columns, differentiated numerically."""

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], n: int, name: str = "", step: float = FD_STEP):
        if n < 1:
            raise ParameterError(f"must be at least 1, got {n}", "n")
        self.func = func
        self.n = n
        self.name = name or getattr(func, "__name__", "f")
        self.step = step

    def value(self, y):
        return np.asarray(self.func(self._columns(y)), dtype=float)

    def gradient(self, y):
        y = self._columns(y)
        h = self.step
        grad = np.empty(y.shape)
        for i in range(self.n):
            e = np.zeros(self.n)
            e[i] = h
            grad[..., i] = (self.func(y + e) - self.func(y - e)) / (2 * h)
        return grad

    def hessian(self, y):
        y = self._columns(y)
        h = self.step
        center = self.func(y)
        hess = np.empty(y.shape + (self.n,))
        for i in range(self.n):
            ei = np.zeros(self.n)
            ei[i] = h
            hess[..., i, i] = (self.func(y + ei) - 2 * center + self.func(y - ei)) / h**2
            for j in range(i):
                ej = np.zeros(self.n)
                ej[j] = h
                mixed = (self.func(y + ei + ej) - self.func(y + ei - ej)
                         - self.func(y - ei + ej) + self.func(y - ei - ej)) / (4 * h**2)
                hess[..., i, j] = hess[..., j, i] = mixed
        return hess


class StickComposition(CylinderFunction):
    """f ∘ φ as a function of the stick coordinates, with exact chain-rule derivatives.

    φ_j is affine in every single x_i, so its Jacobian and second derivatives
    are plain products of (1 − x_l) factors; nothing is divided.
    """

    def __init__(self, f: CylinderFunction):
        self.f = f
        self.n = f.n
        self.name = f"({f.name})∘φ"

    def _phi(self, x: np.ndarray) -> np.ndarray:
        survival = np.cumprod(1.0 - x, axis=-1)
        before = np.concatenate([np.ones_like(x[..., :1]), survival[..., :-1]], axis=-1)
        return x * before

    @staticmethod
    def _prod_except(one_minus: np.ndarray, upto: int, skip: tuple[int, ...]) -> np.ndarray:
        keep = [l for l in range(upto) if l not in skip]
        return np.prod(one_minus[..., keep], axis=-1) if keep else np.ones(one_minus.shape[:-1])

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """J[..., j, i] = ∂φ_j/∂x_i."""
        x = self._columns(x)
        one_minus = 1.0 - x
        jac = np.zeros(x.shape + (self.n,))
        for j in range(self.n):
            jac[..., j, j] = self._prod_except(one_minus, j, ())
            for i in range(j):
                jac[..., j, i] = -x[..., j] * self._prod_except(one_minus, j, (i,))
        return jac

    def second_derivatives(self, x: np.ndarray) -> np.ndarray:
        """K[..., j, i, k] = ∂²φ_j/∂x_i∂x_k (zero on the diagonal i = k)."""
        x = self._columns(x)
        one_minus = 1.0 - x
        second = np.zeros(x.shape + (self.n, self.n))
        for j in range(self.n):
            for i in range(j):
                mixed = -self._prod_except(one_minus, j, (i,))
                second[..., j, i, j] = second[..., j, j, i] = mixed
                for k in range(i):
                    both = x[..., j] * self._prod_except(one_minus, j, (i, k))
                    second[..., j, i, k] = second[..., j, k, i] = both
        return second

    def value(self, x):
        return self.f.value(self._phi(self._columns(x)))

    def gradient(self, x):
        x = self._columns(x)
        return np.einsum("...ji,...j->...i", self.jacobian(x), self.f.gradient(self._phi(x)))

    def hessian(self, x):
        x = self._columns(x)
        y = self._phi(x)
        jac = self.jacobian(x)
        outer = np.einsum("...ji,...jl,...lk->...ik", jac, self.f.hessian(y), jac)
        return outer + np.einsum("...j,...jik->...ik", self.f.gradient(y), self.second_derivatives(x))


# --- Fixed batteries ---

def ibp_battery() -> dict[str, PolynomialCylinder]:
    """The integration-by-parts test functions y1, y2, y1*y2, y1^2."""
    y1 = PolynomialCylinder.coordinate(0)
    y2 = PolynomialCylinder.coordinate(1)
    return {
        "y1": y1,
        "y2": y2,
        "y1*y2": PolynomialCylinder({(1, 1): 1.0}, name="y1*y2"),
        "y1^2": PolynomialCylinder({(2,): 1.0}, name="y1^2"),
    }


def random_polynomial(n: int, degree: int, rng: RngStream, n_terms: int = 6) -> PolynomialCylinder:
    """A polynomial in exactly ``n`` variables of total degree at most ``degree``."""
    if n < 1 or degree < 1:
        raise ParameterError("need at least one variable and degree one", "degree")
    monomials = [e for e in itertools.product(range(degree + 1), repeat=n) if 0 < sum(e) <= degree]
    picks = rng.generator.choice(len(monomials), size=min(n_terms, len(monomials)), replace=False)
    terms = {monomials[int(k)]: float(c) for k, c in zip(picks, rng.normal(len(picks)))}
    # Make sure the last variable appears so the function really has n coordinates.
    terms[(0,) * (n - 1) + (1,)] = terms.get((0,) * (n - 1) + (1,), 0.0) + 1.0
    return PolynomialCylinder(terms)


def consistency_battery(rng: RngStream, max_n: int = 5, degree: int = 3) -> list[PolynomialCylinder]:
    """Fixed, seeded family of polynomials of degree ≤ ``degree`` in 1..``max_n`` variables."""
    battery: list[PolynomialCylinder] = [
        PolynomialCylinder.coordinate(0),
        PolynomialCylinder({(2,): 1.0}, name="y1^2"),
        PolynomialCylinder({(1, 1): 1.0}, name="y1*y2"),
        PolynomialCylinder({(0, 0, 3): 1.0}, name="y3^3"),
    ]
    for n in range(1, max_n + 1):
        battery.append(random_polynomial(n, degree, rng.substream(n)))
    return battery
