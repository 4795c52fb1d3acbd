"""Homogeneous Hamiltonians, their gradients and Legendre duals.

Two families are supported:

* ``isotropic-power``: ``H(p) = C |p|^gamma``
* ``anisotropic-sum``: ``H(p) = sum_i C_i |p_i|^gamma``

Both are gamma-homogeneous and strictly convex, so the dual ``L`` is
gamma'-homogeneous with ``1/gamma + 1/gamma' = 1``. All evaluators accept a
single vector or a stack of vectors with components on the last axis.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "HamiltonianSpec",
    "INFEASIBLE",
    "DegeneratePointWarning",
    "is_infeasible",
    "eval_H",
    "grad_H",
    "eval_L",
    "kinetic_density",
    "kinetic_density_array",
    "fenchel_check",
    "hamiltonian_bounds",
    "lagrangian_bounds",
]

KINDS = ("isotropic-power", "anisotropic-sum")


class _Infeasible(float):
    """+inf marker for pairs outside the effective domain of mL(-w/m)."""

    def __new__(cls):
        return super().__new__(cls, "inf")

    def __repr__(self):
        return "INFEASIBLE"

    def __reduce__(self):
        return (_infeasible, ())


def _infeasible():
    return INFEASIBLE


INFEASIBLE = _Infeasible()


def is_infeasible(value) -> bool:
    """True only for the sentinel, never for an ordinary overflow to inf."""
    return value is INFEASIBLE


class DegeneratePointWarning(UserWarning):
    """Gradient requested at p = 0 where it is defined by continuity only."""


@dataclass(frozen=True)
class HamiltonianSpec:
    gamma: float
    coefficients: tuple = (1.0,)
    kind: str = "isotropic-power"

    def __post_init__(self):
        coeffs = tuple(float(c) for c in np.atleast_1d(self.coefficients))
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "gamma", float(self.gamma))
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown Hamiltonian kind {self.kind!r}")
        if not (math.isfinite(self.gamma) and self.gamma > 1.0):
            raise InvalidInputError(f"gamma must exceed 1, got {self.gamma}")
        if not coeffs or not all(math.isfinite(c) and c > 0 for c in coeffs):
            raise InvalidInputError("coefficients must be finite and positive")
        if self.kind == "isotropic-power" and len(set(coeffs)) > 1:
            raise InvalidInputError("isotropic-power needs equal coefficients")

    @classmethod
    def isotropic(cls, gamma, C=1.0):
        return cls(gamma, (C,), "isotropic-power")

    @classmethod
    def anisotropic(cls, gamma, coefficients):
        return cls(gamma, tuple(coefficients), "anisotropic-sum")

    @property
    def gamma_prime(self) -> float:
        return self.gamma / (self.gamma - 1.0)

    @property
    def is_isotropic(self) -> bool:
        return self.kind == "isotropic-power"

    def axis_coefficients(self, n: int) -> np.ndarray:
        """Per-axis coefficients for an n-dimensional argument."""
        if self.is_isotropic or len(self.coefficients) == 1:
            return np.full(n, self.coefficients[0])
        if len(self.coefficients) != n:
            raise InvalidInputError(
                f"Hamiltonian has {len(self.coefficients)} coefficients, argument has {n} components")
        return np.asarray(self.coefficients)


def _vec(x, name):
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1)
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} must be finite")
    return a


def _out(a, single):
    return float(a) if single else a


def eval_H(spec: HamiltonianSpec, p):
    p = _vec(p, "p")
    g = spec.gamma
    if spec.is_isotropic:
        val = spec.coefficients[0] * np.linalg.norm(p, axis=-1) ** g
    else:
        C = spec.axis_coefficients(p.shape[-1])
        val = np.sum(C * np.abs(p) ** g, axis=-1)
    return _out(val, p.ndim == 1)


def grad_H(spec: HamiltonianSpec, p):
    """Gradient of H; zero at p = 0 (by continuity when gamma < 2)."""
    p = _vec(p, "p")
    g = spec.gamma
    if p.ndim == 1 and g < 2.0 and not np.any(p):
        warnings.warn("grad_H at p=0 with gamma<2 is defined by continuity",
                      DegeneratePointWarning, stacklevel=2)
    if spec.is_isotropic:
        r = np.linalg.norm(p, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            fac = np.where(r > 0, r ** (g - 2.0), 0.0)
        return g * spec.coefficients[0] * fac * p
    C = spec.axis_coefficients(p.shape[-1])
    return g * C * np.sign(p) * np.abs(p) ** (g - 1.0)


def eval_L(spec: HamiltonianSpec, q, method: str = "closed"):
    """Legendre dual sup_p [p.q - H(p)].

    ``method="numeric"`` maximizes along the radius (isotropic) or per axis
    (anisotropic) by golden-section search instead of the closed form.
    """
    q = _vec(q, "q")
    if method == "numeric":
        return _out(_legendre_numeric(spec, q), q.ndim == 1)
    if method != "closed":
        raise InvalidInputError(f"unknown method {method!r}")
    g, gp = spec.gamma, spec.gamma_prime
    if spec.is_isotropic:
        K = (g * spec.coefficients[0]) ** (1.0 - gp) / gp
        val = K * np.linalg.norm(q, axis=-1) ** gp
    else:
        K = (g * spec.axis_coefficients(q.shape[-1])) ** (1.0 - gp) / gp
        val = np.sum(K * np.abs(q) ** gp, axis=-1)
    return _out(val, q.ndim == 1)


def _golden_max(f, lo, hi, tol=1e-12, max_iter=200):
    # vectorized golden-section maximization on [lo, hi]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = np.array(lo, dtype=float), np.array(hi, dtype=float)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if np.all(b - a <= tol * np.maximum(1.0, np.abs(b))):
            break
        left = fc > fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c_new = b - invphi * (b - a)
        d_new = a + invphi * (b - a)
        c, d = c_new, d_new
        fc, fd = f(c), f(d)
    x = 0.5 * (a + b)
    return f(x)


def _legendre_numeric(spec, q):
    g = spec.gamma
    if spec.is_isotropic:
        C = spec.coefficients[0]
        s = np.linalg.norm(q, axis=-1)
        # maximizer lies on the ray through q; bracket it generously
        hi = 2.0 * (s / (g * C)) ** (1.0 / (g - 1.0)) + 1.0
        return _golden_max(lambda r: r * s - C * r ** g, np.zeros_like(s), hi)
    C = spec.axis_coefficients(q.shape[-1])
    s = np.abs(q)
    hi = 2.0 * (s / (g * C)) ** (1.0 / (g - 1.0)) + 1.0
    vals = _golden_max(lambda r: r * s - C * r ** g, np.zeros_like(s), hi)
    return np.sum(vals, axis=-1)


def kinetic_density(spec: HamiltonianSpec, m: float, w):
    """Extended-valued m L(-w/m) for a single cell."""
    w = _vec(w, "w")
    m = float(m)
    if not math.isfinite(m):
        raise InvalidInputError("m must be finite")
    if m > 0:
        return m * eval_L(spec, -w / m)
    if m == 0 and not np.any(w):
        return 0.0
    return INFEASIBLE


def kinetic_density_array(spec: HamiltonianSpec, m, w, m_floor=0.0, w_floor=0.0):
    """Cell-wise m L(-w/m) for arrays: m of shape S, w of shape S + (n,).

    Cells with ``m <= m_floor`` and ``|w| <= w_floor`` are treated as empty
    and contribute 0. Cells with ``m <= 0`` carrying flux above ``w_floor``,
    or with ``m < 0``, give ``np.inf``. Every other cell is evaluated exactly,
    so a thin but moving tail keeps its finite cost.
    """
    m = np.asarray(m, dtype=float)
    w = np.asarray(w, dtype=float)
    wn = np.max(np.abs(w), axis=-1)
    empty = (m <= m_floor) & (wn <= w_floor)
    pos = (m > 0) & ~empty
    safe = np.where(pos, m, 1.0)
    dens = np.where(pos, safe * eval_L(spec, -w / safe[..., None]), 0.0)
    bad = (m < 0) | ((m <= 0) & (wn > w_floor))
    return np.where(bad, np.inf, dens)


def fenchel_check(spec: HamiltonianSpec, p):
    """Residual |L(grad H(p)) - (gamma - 1) H(p)|, zero in exact arithmetic."""
    p = _vec(p, "p")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneratePointWarning)
        res = np.abs(eval_L(spec, grad_H(spec, p)) - (spec.gamma - 1.0) * eval_H(spec, p))
    return _out(res, p.ndim == 1)


def _sum_power_bounds(K, e):
    """(inf, sup) of sum_i K_i |x_i|^e over the Euclidean unit sphere."""
    K = np.asarray(K, dtype=float)
    if e == 2.0 or K.size == 1:
        return float(K.min()), float(K.max())
    if e > 2.0:
        lo = np.sum(K ** (-2.0 / (e - 2.0))) ** (-(e - 2.0) / 2.0)
        return float(lo), float(K.max())
    hi = np.sum(K ** (2.0 / (2.0 - e))) ** ((2.0 - e) / 2.0)
    return float(K.min()), float(hi)


def hamiltonian_bounds(spec: HamiltonianSpec, n: int):
    """Tight (C_H, C'_H) with C_H |p|^gamma <= H(p) <= C'_H |p|^gamma."""
    return _sum_power_bounds(spec.axis_coefficients(n), spec.gamma)


def lagrangian_bounds(spec: HamiltonianSpec, n: int):
    """Tight (C_L, C'_L) with C_L |q|^gamma' <= L(q) <= C'_L |q|^gamma'."""
    g, gp = spec.gamma, spec.gamma_prime
    K = (g * spec.axis_coefficients(n)) ** (1.0 - gp) / gp
    if spec.is_isotropic:
        return float(K[0]), float(K[0])
    return _sum_power_bounds(K, gp)
