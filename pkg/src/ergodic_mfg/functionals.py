"""Energies, quotients and integral identities on flow pairs.

A flow pair (m, w) carries a density and a flux. The kinetic integral
``A = int m L(-w/m)`` and the nonlinear integral ``B = int m^(1+alpha)``
are the two building blocks of every functional here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePairError, DomainError, InvalidInputError
from .exponents import alpha_upper
from .grid import Domain, Field, FlowPair, integrate
from .hamiltonian import INFEASIBLE, HamiltonianSpec, is_infeasible, kinetic_density_array

__all__ = [
    "PotentialSpec",
    "ProblemSpec",
    "eval_potential",
    "potential_field",
    "kinetic_integral",
    "power_integral",
    "energy_delta",
    "energy_zero",
    "j_zero",
    "gn_quotient",
    "pohozaev_p",
    "pohozaev_residuals",
]

POTENTIAL_KINDS = ("power", "log", "zero")
MASS_MODES = ("L1plusAlpha", "L1")

# relative thresholds below which a cell counts as empty
M_FLOOR = 1e-14
W_FLOOR = 1e-14


@dataclass(frozen=True)
class PotentialSpec:
    kind: str = "zero"
    C_V: float = 1.0
    b: float = 2.0

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise InvalidInputError(f"unknown potential kind {self.kind!r}")
        if not self.C_V > 0:
            raise InvalidInputError("C_V must be positive")
        if self.kind == "power" and not self.b > 0:
            raise InvalidInputError("power potential needs b > 0")


@dataclass(frozen=True)
class ProblemSpec:
    hamiltonian: HamiltonianSpec
    alpha: float
    domain: Domain
    potential: PotentialSpec = PotentialSpec()
    delta: float = 0.0
    mass_mode: str = "L1plusAlpha"
    mass: float = 1.0

    def __post_init__(self):
        n = self.domain.dim
        gp = self.hamiltonian.gamma_prime
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        if self.alpha >= alpha_upper(gp, n):
            raise DomainError(
                f"alpha={self.alpha} is not below the Sobolev-critical exponent "
                f"{alpha_upper(gp, n)} for n={n}, gamma'={gp}")
        if not 0.0 <= self.delta < 1.0:
            raise DomainError("delta must lie in [0, 1)")
        if self.delta > 0 and self.potential.kind == "zero":
            raise DomainError("delta > 0 needs a coercive potential")
        if self.mass_mode not in MASS_MODES:
            raise InvalidInputError(f"mass_mode must be one of {MASS_MODES}")
        if not self.mass > 0:
            raise InvalidInputError("mass must be positive")
        if not self.hamiltonian.is_isotropic and len(self.hamiltonian.coefficients) not in (1, n):
            raise InvalidInputError("anisotropic coefficients must match the dimension")

    @property
    def n(self) -> int:
        return self.domain.dim

    def with_delta(self, delta: float) -> "ProblemSpec":
        return ProblemSpec(self.hamiltonian, self.alpha, self.domain, self.potential,
                           delta, self.mass_mode, self.mass)

    def with_domain(self, domain: Domain) -> "ProblemSpec":
        return ProblemSpec(self.hamiltonian, self.alpha, domain, self.potential,
                           self.delta, self.mass_mode, self.mass)


def eval_potential(spec: PotentialSpec, x):
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1) if x.ndim else abs(float(x))
    if spec.kind == "power":
        val = spec.C_V * r ** spec.b
    elif spec.kind == "log":
        val = spec.C_V * np.log1p(r)
    else:
        val = np.zeros_like(r, dtype=float)
    return float(val) if np.ndim(val) == 0 else val


def potential_field(spec: PotentialSpec, domain: Domain) -> Field:
    return Field(domain, eval_potential(spec, domain.points))


def kinetic_integral(pair: FlowPair, hamiltonian: HamiltonianSpec):
    """int m L(-w/m), or INFEASIBLE if some empty cell carries flux."""
    m = pair.m.values
    w = pair.w.pointwise
    if np.any(m < 0):
        return INFEASIBLE
    m_floor = M_FLOOR * float(m.max()) if m.size else 0.0
    w_floor = W_FLOOR * float(np.abs(w).max()) if w.size else 0.0
    dens = kinetic_density_array(hamiltonian, m, w, m_floor, w_floor)
    if np.any(np.isinf(dens)):
        return INFEASIBLE
    return float(pair.domain.cell_volume * np.sum(dens))


def power_integral(m: Field, alpha: float) -> float:
    """int m^(1+alpha)."""
    return float(m.domain.cell_volume * np.sum(np.abs(m.values) ** (1.0 + alpha)))


def energy_delta(pair: FlowPair, spec: ProblemSpec):
    A = kinetic_integral(pair, spec.hamiltonian)
    if is_infeasible(A):
        return INFEASIBLE
    weight = 1.0
    if spec.delta > 0:
        weight = 1.0 + spec.delta * eval_potential(spec.potential, pair.domain.points)
    return A + float(pair.domain.cell_volume * np.sum(weight * pair.m.values))


def energy_zero(pair: FlowPair, hamiltonian: HamiltonianSpec):
    A = kinetic_integral(pair, hamiltonian)
    if is_infeasible(A):
        return INFEASIBLE
    return A + integrate(pair.m)


def j_zero(pair: FlowPair, hamiltonian: HamiltonianSpec, alpha: float):
    A = kinetic_integral(pair, hamiltonian)
    if is_infeasible(A):
        return INFEASIBLE
    return A - power_integral(pair.m, alpha) / (1.0 + alpha)


def _gn_parts(A, M, B, alpha, gp, n):
    if is_infeasible(A):
        raise DegeneratePairError("kinetic term is infinite")
    if A <= 0:
        raise DegeneratePairError("kinetic term vanishes; quotient undefined")
    if B <= 0 or M <= 0:
        raise DegeneratePairError("density has no mass")
    e_kin = n * alpha / gp
    e_mass = ((alpha + 1.0) * gp - n * alpha) / gp
    return math.exp(e_kin * math.log(A) + e_mass * math.log(M) - math.log(B))


def gn_quotient(pair: FlowPair, hamiltonian: HamiltonianSpec, alpha: float) -> float:
    """(int mL)^(n alpha/g') (int m)^(((1+alpha) g' - n alpha)/g') / int m^(1+alpha)."""
    A = kinetic_integral(pair, hamiltonian)
    return _gn_parts(A, integrate(pair.m), power_integral(pair.m, alpha), alpha,
                     hamiltonian.gamma_prime, pair.domain.dim)


def pohozaev_p(pair: FlowPair, hamiltonian: HamiltonianSpec, alpha: float):
    A = kinetic_integral(pair, hamiltonian)
    if is_infeasible(A):
        return INFEASIBLE
    n, gp = pair.domain.dim, hamiltonian.gamma_prime
    return A - n * alpha / ((1.0 + alpha) * gp) * power_integral(pair.m, alpha)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def pohozaev_residuals(sol, alpha=None):
    """Relative residuals (r1, r2) of the two integral identities.

    For a triple of -lap u + H(grad u) + mu m^alpha = kappa (with
    (mu, kappa) = (multiplier, 1) in L^(1+alpha) mode and (1, -multiplier)
    in L^1 mode) the identities read

    (i)  kappa int m / mu = ((alpha+1) g' - n alpha)/((alpha+1) g') int m^(1+alpha)
    (ii) int mL(-w/m) = n mu alpha/((alpha+1) g') int m^(1+alpha) = (g-1) int m H(grad u)

    r2 is the larger of the two relative residuals in (ii).
    """
    alpha = sol.alpha if alpha is None else alpha
    ham = sol.hamiltonian
    n, gp, g = sol.domain.dim, ham.gamma_prime, ham.gamma
    if sol.mode == "L1plusAlpha":
        mu, kappa = sol.multiplier, 1.0
    else:
        mu, kappa = 1.0, -sol.multiplier
    M = integrate(sol.m)
    B = power_integral(sol.m, alpha)
    A = kinetic_integral(sol.pair, ham)
    K = float(sol.domain.cell_volume * np.sum(sol.m.values * sol.hamiltonian_density()))
    c1 = ((alpha + 1.0) * gp - n * alpha) / ((alpha + 1.0) * gp)
    r1 = _rel(kappa * M / mu, c1 * B)
    if is_infeasible(A):
        return r1, math.inf
    c2 = n * mu * alpha / ((alpha + 1.0) * gp)
    r2 = max(_rel(A, c2 * B), _rel(A, (g - 1.0) * K))
    return r1, r2
