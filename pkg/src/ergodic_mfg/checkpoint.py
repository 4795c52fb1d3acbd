"""Solution checkpoints (directory of .fld files plus a key = value summary)."""

from __future__ import annotations

from pathlib import Path

from .errors import InvalidInputError
from .functionals import PotentialSpec
from .grid import read_field, write_field
from .hamiltonian import HamiltonianSpec
from .solver import SolutionTriple

__all__ = ["save_solution", "load_solution", "read_summary", "format_summary"]

U_FILE, M_FILE, SUMMARY_FILE = "u.fld", "m.fld", "summary.txt"


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def format_summary(items) -> str:
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in items)


def read_summary(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise InvalidInputError(f"malformed summary line {line!r}")
        out[key.strip()] = val.strip()
    return out


def solution_items(sol: SolutionTriple):
    ham, pot = sol.hamiltonian, sol.potential
    return [
        ("mode", sol.mode),
        ("multiplier", float(sol.multiplier)),
        ("alpha", float(sol.alpha)),
        ("delta", float(sol.delta)),
        ("hamiltonian.kind", ham.kind),
        ("hamiltonian.gamma", ham.gamma),
        ("hamiltonian.coefficients", tuple(ham.coefficients)),
        ("potential.kind", pot.kind),
        ("potential.C_V", float(pot.C_V)),
        ("potential.b", float(pot.b)),
        ("stencil_order", int(sol.stencil_order)),
        ("lambda_residual", float(sol.lambda_residual)),
        ("iterations", int(sol.iterations)),
    ]


def save_solution(directory, sol: SolutionTriple, extra=()) -> dict:
    """Write u, m and the summary; returns {file name: path}."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_field(d / U_FILE, sol.u)
    write_field(d / M_FILE, sol.m)
    (d / SUMMARY_FILE).write_text(format_summary(solution_items(sol) + list(extra)))
    return {name: d / name for name in (U_FILE, M_FILE, SUMMARY_FILE)}


def load_solution(directory) -> SolutionTriple:
    d = Path(directory)
    if d.is_file():
        d = d.parent
    s = read_summary(d / SUMMARY_FILE)
    try:
        ham = HamiltonianSpec(float(s["hamiltonian.gamma"]),
                              tuple(float(c) for c in s["hamiltonian.coefficients"].split(",")),
                              s["hamiltonian.kind"])
        pot = PotentialSpec(s["potential.kind"], float(s["potential.C_V"]), float(s["potential.b"]))
        u, m = read_field(d / U_FILE), read_field(d / M_FILE)
        return SolutionTriple(u, m, float(s["multiplier"]), ham, float(s["alpha"]), s["mode"],
                              float(s["delta"]), pot, float(s.get("lambda_residual", 0.0)),
                              int(s.get("stencil_order", 4)), int(s.get("iterations", 0)))
    except KeyError as err:
        raise InvalidInputError(f"checkpoint summary lacks {err}") from err
