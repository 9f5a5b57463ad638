"""Differential operators of the GEM generator.

ℒ acts on cylinder functions of the simplex coordinates, L_n on smooth
functions of the first n stick coordinates. The two are linked through
φ: L_n(f∘φ) = (ℒf)∘φ.
"""

from __future__ import annotations

import numpy as np

from ..stick_breaking import BoundaryPoint, SimplexPoint, StickPoint, phi_array
from .coefficients import Normalization, diffusion_matrix, drift_vector
from .cylinder import CylinderFunction, StickComposition
from .params import ParamSeq


def _rows(y) -> np.ndarray:
    return np.atleast_2d(np.asarray(y, dtype=float))


def _padded_gradient(f: CylinderFunction, y: np.ndarray, m: int) -> np.ndarray:
    grad = np.zeros(y.shape[:-1] + (m,))
    if f.n:
        grad[..., :f.n] = f.gradient(y)
    return grad


# --- ℒ and Γ on the simplex ---

def gamma_array(f: CylinderFunction, g: CylinderFunction, y: np.ndarray, remainder,
                normalization: Normalization = Normalization.UNIT) -> np.ndarray:
    y = _rows(y)
    m = max(f.n, g.n)
    if m == 0:
        return np.zeros(y.shape[:-1])
    a = diffusion_matrix(y, remainder, m)
    df = _padded_gradient(f, y, m)
    dg = _padded_gradient(g, y, m)
    return normalization.weight * np.einsum("...i,...ij,...j->...", df, a, dg)


def generator_array(f: CylinderFunction, y: np.ndarray, remainder, p: ParamSeq,
                    normalization: Normalization = Normalization.UNIT) -> np.ndarray:
    y = _rows(y)
    if f.n == 0:
        return np.zeros(y.shape[:-1])
    a = diffusion_matrix(y, remainder, f.n)
    b = drift_vector(y, remainder, p, f.n)
    second = np.einsum("...ij,...ij->...", a, f.hessian(y))
    first = np.einsum("...i,...i->...", b, f.gradient(y))
    return normalization.weight * second + first


def gamma(f: CylinderFunction, g: CylinderFunction, y: SimplexPoint,
          normalization: Normalization = Normalization.UNIT) -> float:
    """Γ(f, g)(y) = Σ a_ij ∂_i f ∂_j g (halved under ``Normalization.ITO``)."""
    return float(gamma_array(f, g, y.y, y.remainder, normalization)[0])


def apply_generator(f: CylinderFunction, y: SimplexPoint, p: ParamSeq,
                    normalization: Normalization = Normalization.UNIT) -> float:
    """(ℒf)(y) = Σ a_ij ∂²_ij f + Σ b_i ∂_i f (second-order part halved under ITO)."""
    return float(generator_array(f, y.y, y.remainder, p, normalization)[0])


# --- L_n on the sticks ---

def finite_generator_array(h: CylinderFunction, x: np.ndarray, p: ParamSeq,
                           normalization: Normalization = Normalization.UNIT) -> np.ndarray:
    x = _rows(x)
    if h.n == 0:
        return np.zeros(x.shape[:-1])
    xs = x[..., :h.n]
    variance = xs * (1.0 - xs)
    drift = p.a[:h.n] - p.rates[:h.n] * xs
    second = np.einsum("...i,...ii->...", variance, h.hessian(x))
    first = np.einsum("...i,...i->...", drift, h.gradient(x))
    return normalization.weight * second + first


def apply_finite_generator(h: CylinderFunction, x: StickPoint, p: ParamSeq,
                           normalization: Normalization = Normalization.UNIT) -> float:
    """L_n h(x) = Σ x_i(1−x_i) ∂²_i h + Σ (a_i − (a_i+b_i) x_i) ∂_i h."""
    return float(finite_generator_array(h, x.u, p, normalization)[0])


def pullback_gradient_array(f: CylinderFunction, x: np.ndarray) -> np.ndarray:
    """∂(f∘φ)/∂x_i = Σ_{j≥i} (δ_ij − x_i) φ_j / (x_i(1−x_i)) · ∂f/∂φ_j, row-wise."""
    x = _rows(x)
    n = x.shape[-1]
    on_boundary = np.flatnonzero(np.any((x <= 0.0) | (x >= 1.0), axis=tuple(range(x.ndim - 1))))
    if on_boundary.size:
        raise BoundaryPoint("stick coordinate on the boundary {0, 1}", int(on_boundary[0]) + 1)
    y, _ = phi_array(x)
    df = _padded_gradient(f, y, n)
    idx = np.arange(n)
    delta = (idx[:, None] == idx[None, :]).astype(float)
    upper = idx[None, :] >= idx[:, None]
    # weights[..., i, j] for j ≥ i
    weights = (delta - x[..., :, None]) * y[..., None, :] / (x * (1.0 - x))[..., :, None]
    return np.einsum("...ij,...j->...i", np.where(upper, weights, 0.0), df)


def pullback_gradient(f: CylinderFunction, x: StickPoint) -> np.ndarray:
    return pullback_gradient_array(f, x.u)[0]


def pullback_dirichlet_identity(f: CylinderFunction, g: CylinderFunction,
                                x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of Σ x_i(1−x_i) ∂_i(f∘φ) ∂_i(g∘φ) = Γ(f, g)∘φ, row-wise."""
    x = _rows(x)
    m = max(f.n, g.n)
    if m == 0:
        zeros = np.zeros(x.shape[:-1])
        return zeros, zeros
    xs = x[..., :m]
    df = _padded_gradient(StickComposition(f), xs, m)
    dg = _padded_gradient(StickComposition(g), xs, m)
    lhs = np.einsum("...i,...i,...i->...", xs * (1.0 - xs), df, dg)
    y, remainder = phi_array(xs)
    return lhs, gamma_array(f, g, y, remainder)
