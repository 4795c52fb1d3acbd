"""Critical exponents of the focusing ergodic problem."""

import math

from .errors import DomainError

__all__ = ["conjugate", "alpha_lower", "alpha_upper", "q_hat", "regime_of"]

# relative width of the band treated as exactly mass-critical
CRITICAL_RTOL = 1e-12


def conjugate(gamma: float) -> float:
    if not gamma > 1.0:
        raise DomainError(f"gamma must exceed 1, got {gamma}")
    return gamma / (gamma - 1.0)


def alpha_lower(gamma_prime: float, n: int) -> float:
    """Mass-critical exponent gamma'/n."""
    return gamma_prime / n


def alpha_upper(gamma_prime: float, n: int) -> float:
    """Sobolev-critical exponent gamma'/(n - gamma'), +inf when n <= gamma'."""
    if n <= gamma_prime:
        return math.inf
    return gamma_prime / (n - gamma_prime)


def q_hat(gamma_prime: float, n: int) -> float:
    """Sobolev exponent of the density in the admissible set.

    When gamma' = n any value in (2n/(n+2), n) is allowed; the midpoint is
    returned.
    """
    if gamma_prime < n:
        return n / (n - gamma_prime + 1.0)
    if gamma_prime == n:
        return 0.5 * (2.0 * n / (n + 2.0) + n)
    return gamma_prime


def regime_of(alpha: float, gamma_prime: float, n: int) -> str:
    a_lo = alpha_lower(gamma_prime, n)
    if abs(alpha - a_lo) <= CRITICAL_RTOL * a_lo:
        return "critical"
    return "subcritical" if alpha < a_lo else "supercritical"
