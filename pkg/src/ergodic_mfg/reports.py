"""CSV export of functional values."""

from __future__ import annotations

import csv

from .functionals import (energy_delta, energy_zero, gn_quotient, j_zero, kinetic_integral,
                          pohozaev_p, power_integral)
from .grid import integrate
from .errors import DegeneratePairError

__all__ = ["FUNCTIONAL_COLUMNS", "functional_rows", "write_functionals_csv"]

FUNCTIONAL_COLUMNS = ("name", "value", "alpha", "gamma", "delta", "grid_N")


def functional_rows(sol):
    """Standard functionals of a solution triple, one row each."""
    pair, ham, alpha = sol.pair, sol.hamiltonian, sol.alpha
    vals = [
        ("multiplier", sol.multiplier),
        ("mass", integrate(sol.m)),
        ("power_integral", power_integral(sol.m, alpha)),
        ("kinetic", kinetic_integral(pair, ham)),
        ("energy_zero", energy_zero(pair, ham)),
        ("j_zero", j_zero(pair, ham, alpha)),
        ("pohozaev_p", pohozaev_p(pair, ham, alpha)),
    ]
    if sol.mode == "L1plusAlpha":
        vals.append(("energy_delta", energy_delta(pair, sol.problem())))
    try:
        vals.append(("gn_quotient", gn_quotient(pair, ham, alpha)))
    except DegeneratePairError:
        pass
    meta = (alpha, ham.gamma, sol.delta, sol.domain.points_per_axis)
    return [(name, float(v)) + meta for name, v in vals]


def write_functionals_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(FUNCTIONAL_COLUMNS)
        for name, value, alpha, gamma, delta, N in rows:
            wr.writerow([name, repr(float(value)), repr(float(alpha)), repr(float(gamma)),
                         repr(float(delta)), int(N)])
