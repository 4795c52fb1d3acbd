"""Closed-form scalings, levels and regime classification.

Every field transform here acts on grid metadata only: a dilation
x -> t x shrinks the half-width by 1/t and multiplies the values, so the
scaling identities hold to rounding on any grid.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from .errors import DomainError, FormulaError, InvalidInputError, OutOfScopeError, SingularScalingError
from .exponents import CRITICAL_RTOL, alpha_lower, alpha_upper, conjugate, regime_of
from .functionals import kinetic_integral, power_integral
from .grid import FlowPair, integrate
from .hamiltonian import is_infeasible

__all__ = [
    "RegimeReport",
    "classify",
    "mass_scaling_factors",
    "multiplier_from_scaled",
    "scale_to_mass",
    "gn_constant_from_e0",
    "e0_from_gn_constant",
    "mountain_pass_level",
    "dilation_maximum",
    "optimal_dilation",
    "dilation_path",
    "dilation_energy",
    "critical_mass",
    "critical_multiplier",
    "critical_e0",
    "critical_scalings",
]


@dataclass(frozen=True)
class RegimeReport:
    alpha: float
    alpha_star: float
    alpha_upper: float
    regime: str
    gamma_prime: float
    n: int
    Gamma_alpha: float = None
    e0: float = None
    M_star: float = None
    e_MP: float = None
    lambda_critical: float = None
    mass: float = None

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {'' if v is None else _fmt(v)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RegimeReport":
        kw = {}
        types = {f.name: f for f in fields(cls)}
        for line in text.splitlines():
            if not line.strip():
                continue
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in types:
                raise InvalidInputError(f"unknown report key {key!r}")
            if val == "":
                kw[key] = None
            elif key == "regime":
                kw[key] = val
            elif key == "n":
                kw[key] = int(val)
            else:
                kw[key] = float(val)
        return cls(**kw)

    @staticmethod
    def csv_header() -> list:
        return [f.name for f in fields(RegimeReport)]

    def csv_row(self) -> list:
        return ["" if v is None else _fmt(v) for v in asdict(self).values()]


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _check_window(alpha, gamma_prime, n):
    if not (alpha > 0 and gamma_prime > 1 and n >= 1):
        raise DomainError("need alpha > 0, gamma' > 1 and n >= 1")
    if alpha >= alpha_upper(gamma_prime, n):
        raise OutOfScopeError(
            f"alpha={alpha} >= {alpha_upper(gamma_prime, n)}: Sobolev-supercritical")


def classify(alpha, gamma, n, e0=None, mass=None, Gamma_alpha=None) -> RegimeReport:
    """Regime of (alpha, gamma, n) plus the levels computable from the inputs.

    Gamma_alpha follows from e0 off criticality. At criticality a supplied
    Gamma_alpha yields the critical mass and multiplier. e_MP needs e0 and a
    mass in the supercritical regime.
    """
    if int(n) != n:
        raise DomainError("n must be an integer")
    n = int(n)
    gp = conjugate(gamma)
    _check_window(alpha, gp, n)
    regime = regime_of(alpha, gp, n)
    rep = dict(alpha=float(alpha), alpha_star=alpha_lower(gp, n), alpha_upper=alpha_upper(gp, n),
               regime=regime, gamma_prime=gp, n=n, Gamma_alpha=Gamma_alpha, e0=e0, mass=mass)
    if regime == "critical":
        if Gamma_alpha is not None:
            Ms = critical_mass(Gamma_alpha, alpha_lower(gp, n))
            rep["M_star"] = Ms
            rep["lambda_critical"] = critical_multiplier(Ms, gp, n)
    elif e0 is not None:
        if Gamma_alpha is None:
            rep["Gamma_alpha"] = gn_constant_from_e0(alpha, gp, n, e0)
        if regime == "supercritical" and mass is not None:
            rep["e_MP"] = mountain_pass_level(alpha, gp, n, e0, mass)
    return RegimeReport(**rep)


def _is_critical(alpha, gp, n):
    return abs(n * alpha - gp) <= CRITICAL_RTOL * gp


def mass_scaling_factors(mu0, M, alpha, gamma_prime, n):
    """(T, s0, t0, r0) of the L^(1+alpha) to L^1 rescaling."""
    gp = gamma_prime
    _check_window(alpha, gp, n)
    if _is_critical(alpha, gp, n):
        raise SingularScalingError(
            "mass rescaling is singular at n alpha = gamma'; use the critical formulas")
    if not (mu0 > 0 and M > 0):
        raise DomainError("mu0 and M must be positive")
    T = (1.0 - n * alpha / ((1.0 + alpha) * gp)) * mu0 ** (1.0 + 1.0 / alpha) / M
    return _factors_from_T(T, mu0, alpha, gp, n)


def _factors_from_T(T, mu0, alpha, gp, n):
    k = n * alpha - gp
    r0 = T ** (alpha / k)
    t0 = T ** (alpha * (gp - 2.0) / k)
    s0 = mu0 ** (1.0 / alpha) * T ** (gp / k)
    return T, s0, t0, r0


def multiplier_from_scaled(lambda_hat, M, alpha, gamma_prime, n):
    """Invert the rescaling: recover mu0 from the L^1-mode multiplier."""
    gp = gamma_prime
    if not lambda_hat < 0:
        raise DomainError("the L^1-mode multiplier must be negative")
    k = n * alpha - gp
    T = (-lambda_hat) ** (k / (alpha * gp))
    c = 1.0 - n * alpha / ((1.0 + alpha) * gp)
    return (M * T / c) ** (alpha / (1.0 + alpha))


def scale_to_mass(sol, M, mass_source="measured"):
    """Rescale an L^(1+alpha)-mode triple to an L^1-mode triple of mass M.

    With ``mass_source="measured"`` the factor T uses the grid mass of m0,
    so the new mass is M to rounding. ``"identity"`` uses the closed form in
    mu0 alone, which agrees up to the Pohozaev residual of the input.
    """
    if sol.mode != "L1plusAlpha":
        raise InvalidInputError("scale_to_mass expects an L^(1+alpha)-mode triple")
    alpha, gp, n = sol.alpha, sol.hamiltonian.gamma_prime, sol.domain.dim
    mu0 = sol.multiplier
    T, s0, t0, r0 = mass_scaling_factors(mu0, M, alpha, gp, n)
    if mass_source == "measured":
        T = mu0 ** (1.0 / alpha) * integrate(sol.m) / M
        T, s0, t0, r0 = _factors_from_T(T, mu0, alpha, gp, n)
    elif mass_source != "identity":
        raise InvalidInputError("mass_source must be 'measured' or 'identity'")
    lam_hat = -t0 * r0 ** 2
    return replace(sol, u=sol.u.dilate(r0, t0), m=sol.m.dilate(r0, s0), multiplier=lam_hat,
                   mode="L1", lambda_residual=sol.lambda_residual * t0 * r0 ** 2)


def gn_constant_from_e0(alpha, gamma_prime, n, e0):
    gp = gamma_prime
    _check_window(alpha, gp, n)
    if not e0 > 0:
        raise DomainError("e0 must be positive")
    a = (1.0 + alpha) * gp - n * alpha
    return (n * alpha / a) ** (n * alpha / gp) * (a / ((1.0 + alpha) * gp) * e0) ** (1.0 + alpha)


def e0_from_gn_constant(alpha, gamma_prime, n, Gamma):
    """Inverse of gn_constant_from_e0."""
    gp = gamma_prime
    _check_window(alpha, gp, n)
    a = (1.0 + alpha) * gp - n * alpha
    base = Gamma / (n * alpha / a) ** (n * alpha / gp)
    return base ** (1.0 / (1.0 + alpha)) * (1.0 + alpha) * gp / a


def mountain_pass_level(alpha, gamma_prime, n, e0, M):
    gp = gamma_prime
    _check_window(alpha, gp, n)
    if n * alpha <= gp or _is_critical(alpha, gp, n):
        raise DomainError("mountain-pass level needs a mass-supercritical exponent")
    if not (e0 > 0 and M > 0):
        raise DomainError("e0 and M must be positive")
    k = n * alpha - gp
    a = (1.0 + alpha) * gp - n * alpha
    lead = k / ((1.0 + alpha) * gp)
    base = (1.0 - n * alpha / ((1.0 + alpha) * gp)) / M
    return lead * base ** (a / k) * e0 ** ((1.0 + alpha) * gp / k)


def dilation_energy(t, A, B, alpha, gamma_prime, n):
    """t^g' A - t^(n alpha) B / (1 + alpha)."""
    return t ** gamma_prime * A - t ** (n * alpha) * B / (1.0 + alpha)


def dilation_maximum(A, B, alpha, gamma_prime, n):
    """(t*, j_max) of the dilation energy for kinetic A and power integral B."""
    gp = gamma_prime
    if n * alpha <= gp:
        raise DomainError("no interior maximum unless n alpha > gamma'")
    if not (A > 0 and B > 0):
        raise DomainError("need positive kinetic and power integrals")
    k = n * alpha - gp
    t_star = (gp * (1.0 + alpha) * A / (n * alpha * B)) ** (1.0 / k)
    j_max = k / ((1.0 + alpha) * gp) * B * t_star ** (n * alpha)
    return t_star, j_max


def optimal_dilation(pair: FlowPair, hamiltonian, alpha):
    A = kinetic_integral(pair, hamiltonian)
    if is_infeasible(A):
        raise DomainError("pair has infinite kinetic energy")
    B = power_integral(pair.m, alpha)
    return dilation_maximum(A, B, alpha, hamiltonian.gamma_prime, pair.domain.dim)


def dilation_path(pair: FlowPair, t) -> FlowPair:
    """(t^n m(t x), t^(n+1) w(t x)) by metadata rescaling."""
    if not t > 0:
        raise DomainError("t must be positive")
    n = pair.domain.dim
    return FlowPair(pair.m.dilate(t, t ** n), pair.w.dilate(t, t ** (n + 1)))


def critical_mass(Gamma_at_alpha_star, alpha_star):
    if not (Gamma_at_alpha_star > 0 and alpha_star > 0):
        raise DomainError("inputs must be positive")
    return (Gamma_at_alpha_star * (1.0 + alpha_star)) ** (1.0 / alpha_star)


def critical_multiplier(M_star, gamma_prime, n):
    if not M_star > 0:
        raise DomainError("M_star must be positive")
    return -gamma_prime / (n * M_star)


def critical_e0(M_star, gamma_prime, n):
    return ((n + gamma_prime) / gamma_prime * M_star) ** (gamma_prime / (n + gamma_prime))


def critical_scalings(M_star, gamma_prime, n, e0=None):
    """(s1, t1, r1) carrying the critical L^(1+alpha) solution to mass M_star.

    ``e0`` defaults to the critical-energy relation; a supplied value must
    agree with it. Both the t r^2 identity and the e0-based form of s1 are
    enforced as self-tests.
    """
    gp = gamma_prime
    if not (M_star > 0 and gp > 1 and n >= 1):
        raise DomainError("inputs must be positive")
    e0_ref = critical_e0(M_star, gp, n)
    if e0 is None:
        e0 = e0_ref
    s1 = ((gp / n) ** (n / gp) * ((n + gp) / gp) ** (n / (n + gp))
          * M_star ** (-n * n / (gp * (n + gp))))
    t1 = (gp / (n * M_star)) ** ((gp - 2.0) / gp)
    r1 = (gp / (n * M_star)) ** (1.0 / gp)
    target = gp / (n * M_star)
    if abs(t1 * r1 ** 2 - target) > 1e-10 * target:
        raise FormulaError("t1 r1^2 differs from gamma'/(n M*)")
    s_from_e0 = (gp * e0 / (n * M_star)) ** (n / gp)
    if abs(s_from_e0 - s1) > 1e-10 * s1:
        raise FormulaError("s1 is inconsistent with the supplied e0")
    return s1, t1, r1
