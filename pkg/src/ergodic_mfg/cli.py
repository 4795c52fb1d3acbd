"""Command-line front end.

Every subcommand reads a flat ``key = value`` config (dotted sections such
as ``problem.alpha = 3.0``), runs one pipeline and writes its outputs plus a
``manifest.json`` with input and output hashes.

Exit codes: 0 success, 1 numerical failure (solver error or a failed
certificate), 2 invalid configuration, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import subprocess
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import load_solution, save_solution
from .errors import MFGError, SolverError
from .exponents import regime_of
from .functionals import (PotentialSpec, ProblemSpec, j_zero, kinetic_integral, pohozaev_p)
from .grid import Domain
from .hamiltonian import HamiltonianSpec
from .reports import functional_rows, write_functionals_csv
from .scaling import (classify, dilation_path, gn_constant_from_e0, multiplier_from_scaled,
                      scale_to_mass)
from .solver import (SolverConfig, continue_delta_to_zero, solve_auxiliary_delta,
                     write_iteration_log)
from .verify import (check_decay, check_gradient_bound, check_pohozaev, geometry_probe,
                     nls_oracle, write_reports_csv)

__all__ = ["RunConfig", "parse_config", "serialize_config", "load_config", "main"]

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


class ConfigError(MFGError, ValueError):
    """Malformed or inconsistent configuration."""


_PROBLEM_KEYS = {
    "problem.dim": int, "problem.half_width": float, "problem.points_per_axis": int,
    "problem.boundary": str, "problem.alpha": float, "problem.delta": float,
    "problem.mass_mode": str, "problem.mass": float,
    "hamiltonian.kind": str, "hamiltonian.gamma": float, "hamiltonian.coefficients": "floats",
    "potential.kind": str, "potential.C_V": float, "potential.b": float,
}
_SOLVER_TYPES = {"damping": float, "hjb_pseudo_time_step": float, "fixed_point_tol": float,
                 "multiplier_tol": float, "max_outer_iters": int, "delta_schedule": "floats",
                 "recenter": "bool", "stencil_order": int, "fp_scheme": str, "mu_update": str,
                 "hjb_tol": float, "max_hjb_iters": int, "boundary_mass_tol": float,
                 "boundary_mass_fail": float}
_OPTION_KEYS = {"scale.mass": float, "geometry.r0": float, "path.trange": str,
                "classify.gamma_alpha": float, "classify.e0": float, "verify.oracle": "bool"}
_ALL_KEYS = dict(_PROBLEM_KEYS)
_ALL_KEYS.update({f"solver.{k}": v for k, v in _SOLVER_TYPES.items()})
_ALL_KEYS.update(_OPTION_KEYS)
_ALL_KEYS["outputs.directory"] = str


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemSpec
    solver: SolverConfig = SolverConfig()
    outputs: str = "out"
    options: dict = field(default_factory=dict)


def _convert(key, raw):
    kind = _ALL_KEYS[key]
    try:
        if kind == "floats":
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if kind == "bool":
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        return kind(raw.strip())
    except ValueError as err:
        raise ConfigError(f"bad value for {key}: {raw!r}") from err


def parse_config(text: str) -> RunConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = _convert(key, val.strip())
    return _build(raw)


def _build(raw: dict) -> RunConfig:
    missing = [k for k in ("problem.dim", "problem.half_width", "problem.points_per_axis",
                           "problem.alpha", "hamiltonian.gamma") if k not in raw]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    try:
        domain = Domain(raw["problem.dim"], raw["problem.half_width"],
                        raw["problem.points_per_axis"], raw.get("problem.boundary", "no-flux"))
        ham = HamiltonianSpec(raw["hamiltonian.gamma"], raw.get("hamiltonian.coefficients", (1.0,)),
                              raw.get("hamiltonian.kind", "isotropic-power"))
        pot = PotentialSpec(raw.get("potential.kind", "power"), raw.get("potential.C_V", 1.0),
                            raw.get("potential.b", 2.0))
        problem = ProblemSpec(ham, raw["problem.alpha"], domain, pot,
                              raw.get("problem.delta", 0.0),
                              raw.get("problem.mass_mode", "L1plusAlpha"),
                              raw.get("problem.mass", 1.0))
        solver = SolverConfig(**{k[len("solver."):]: v for k, v in raw.items()
                                 if k.startswith("solver.")})
    except (MFGError, TypeError) as err:
        raise ConfigError(str(err)) from err
    options = {k: v for k, v in raw.items() if k in _OPTION_KEYS}
    if "path.trange" in options:
        _parse_trange(options["path.trange"])
    return RunConfig(problem, solver, raw.get("outputs.directory", "out"), options)


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def serialize_config(cfg: RunConfig) -> str:
    p = cfg.problem
    items = [
        ("problem.dim", p.domain.dim), ("problem.half_width", p.domain.half_width),
        ("problem.points_per_axis", p.domain.points_per_axis),
        ("problem.boundary", p.domain.boundary), ("problem.alpha", p.alpha),
        ("problem.delta", p.delta), ("problem.mass_mode", p.mass_mode), ("problem.mass", p.mass),
        ("hamiltonian.kind", p.hamiltonian.kind), ("hamiltonian.gamma", p.hamiltonian.gamma),
        ("hamiltonian.coefficients", p.hamiltonian.coefficients),
        ("potential.kind", p.potential.kind), ("potential.C_V", p.potential.C_V),
        ("potential.b", p.potential.b),
    ]
    for f in dataclasses.fields(SolverConfig):
        items.append((f"solver.{f.name}", getattr(cfg.solver, f.name)))
    items.append(("outputs.directory", cfg.outputs))
    items += sorted(cfg.options.items())
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in items)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def _parse_trange(text):
    try:
        lo, hi, steps = text.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError as err:
        raise ConfigError(f"t range must read LO:HI:STEPS, got {text!r}") from err
    if not (0 < lo < hi and steps >= 2):
        raise ConfigError("t range needs 0 < LO < HI and STEPS >= 2")
    return lo, hi, steps


# --- outputs ----------------------------------------------------------------------

def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _version():
    try:
        here = Path(__file__).resolve().parent
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=10)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _write_manifest(out: Path, command, cfg, inputs, outputs):
    manifest = {
        "command": command,
        "version": _version(),
        "inputs": {name: {"path": str(p), "sha256": _sha256(p)} for name, p in inputs.items()},
        "config": serialize_config(cfg),
        "outputs": {str(Path(p).relative_to(out)): _sha256(p) for p in sorted(map(str, outputs))},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _out_dir(cfg, args):
    out = Path(args.out or cfg.outputs)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _inputs(args, ckpt=None):
    ins = {"config": Path(args.config)}
    if ckpt is not None:
        d = Path(ckpt)
        d = d.parent if d.is_file() else d
        for name in ("u.fld", "m.fld", "summary.txt"):
            ins[f"checkpoint/{name}"] = d / name
    return ins


# --- commands ---------------------------------------------------------------------

def cmd_solve_aux(cfg: RunConfig, args) -> int:
    if not cfg.problem.delta > 0:
        raise ConfigError("solve-aux needs problem.delta > 0")
    sol = solve_auxiliary_delta(cfg.problem, cfg.solver)
    out = _out_dir(cfg, args)
    files = save_solution(out, sol, [("energy", float(sol.energy())),
                                     ("energy_gap", sol.energy_gap())])
    log = out / "iterations.csv"
    write_iteration_log(log, sol.history)
    print(f"mu_delta = {sol.multiplier!r}  energy gap = {sol.energy_gap():.2e}")
    _write_manifest(out, "solve-aux", cfg, _inputs(args), list(files.values()) + [log])
    return EXIT_OK


def cmd_solve_free(cfg: RunConfig, args) -> int:
    out = _out_dir(cfg, args)
    sol = continue_delta_to_zero(cfg.problem.with_delta(0.0), cfg.solver,
                                 checkpoint_dir=out / "stages")
    stages = [(f"stage.{i}", f"{d!r}, {mu!r}, {e!r}") for i, (d, mu, e) in enumerate(sol.stages)]
    files = save_solution(out, sol, [("e0", sol.multiplier), ("energy_gap", sol.energy_gap())]
                          + stages)
    log = out / "iterations.csv"
    write_iteration_log(log, sol.history)
    fcsv = out / "functionals.csv"
    write_functionals_csv(fcsv, functional_rows(sol))
    print(f"e0 = {sol.multiplier!r}  lambda residual = {sol.lambda_residual:.2e}")
    stage_files = sorted((out / "stages").glob("*.fld"))
    _write_manifest(out, "solve-free", cfg, _inputs(args),
                    list(files.values()) + [log, fcsv] + stage_files)
    return EXIT_OK


def _mass(cfg, args):
    if args.mass is not None:
        return float(args.mass)
    return float(cfg.options.get("scale.mass", cfg.problem.mass))


def _require_checkpoint(args):
    if not args.checkpoint:
        raise ConfigError("this command needs --checkpoint")
    return args.checkpoint


def cmd_scale(cfg: RunConfig, args) -> int:
    ckpt = _require_checkpoint(args)
    sol = load_solution(ckpt)
    M = _mass(cfg, args)
    scaled = scale_to_mass(sol, M)
    out = _out_dir(cfg, args)
    files = save_solution(out, scaled, [("mass", M)])
    fcsv = out / "functionals.csv"
    write_functionals_csv(fcsv, functional_rows(scaled))
    print(f"lambda = {scaled.multiplier!r} at mass {M!r}")
    _write_manifest(out, "scale", cfg, _inputs(args, ckpt), list(files.values()) + [fcsv])
    return EXIT_OK


def _e0_of(sol):
    if sol.mode == "L1plusAlpha":
        return sol.multiplier
    from .grid import integrate
    return multiplier_from_scaled(sol.multiplier, integrate(sol.m), sol.alpha,
                                  sol.hamiltonian.gamma_prime, sol.domain.dim)


def cmd_gn(cfg: RunConfig, args) -> int:
    from .functionals import gn_quotient

    ckpt = _require_checkpoint(args)
    sol = load_solution(ckpt)
    e0 = _e0_of(sol)
    n, gp = sol.domain.dim, sol.hamiltonian.gamma_prime
    formula = gn_constant_from_e0(sol.alpha, gp, n, e0)
    quotient = gn_quotient(sol.pair, sol.hamiltonian, sol.alpha)
    out = _out_dir(cfg, args)
    meta = (sol.alpha, sol.hamiltonian.gamma, sol.delta, sol.domain.points_per_axis)
    rows = [("e0", e0) + meta, ("gn_constant_from_e0", formula) + meta,
            ("gn_quotient", quotient) + meta,
            ("relative_gap", abs(quotient / formula - 1.0)) + meta]
    path = out / "gn.csv"
    write_functionals_csv(path, rows)
    print(f"Gamma_alpha: formula {formula!r}, quotient {quotient!r}")
    _write_manifest(out, "gn", cfg, _inputs(args, ckpt), [path])
    return EXIT_OK


def cmd_classify(cfg: RunConfig, args) -> int:
    p = cfg.problem
    rep = classify(p.alpha, p.hamiltonian.gamma, p.domain.dim,
                   e0=cfg.options.get("classify.e0"),
                   mass=args.mass if args.mass is not None else cfg.options.get("scale.mass"),
                   Gamma_alpha=cfg.options.get("classify.gamma_alpha"))
    out = _out_dir(cfg, args)
    txt, row = out / "regime.txt", out / "regime.csv"
    txt.write_text(rep.to_text())
    with open(row, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(rep.csv_header())
        wr.writerow(rep.csv_row())
    print(rep.to_text(), end="")
    _write_manifest(out, "classify", cfg, _inputs(args), [txt, row])
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    ckpt = _require_checkpoint(args)
    sol = load_solution(ckpt)
    reports = []
    if sol.delta == 0.0:
        reports.append(check_pohozaev(sol))
    reports.append(check_decay(sol.m))
    reports.append(check_gradient_bound(sol.u, sol.potential, sol.delta, sol.hamiltonian.gamma))
    ham = sol.hamiltonian
    if (cfg.options.get("verify.oracle", True) and ham.gamma == 2.0 and ham.is_isotropic
            and sol.delta == 0.0):
        reports.append(nls_oracle(sol.problem(), sol))
    n = sol.domain.dim
    if regime_of(sol.alpha, ham.gamma_prime, n) == "supercritical":
        pair = sol.pair
        R0 = args.r0 if args.r0 is not None else cfg.options.get("geometry.r0")
        if R0 is None:
            R0 = 0.5 * kinetic_integral(pair, ham)
        reports.append(geometry_probe(pair, R0, ham, sol.alpha))
    out = _out_dir(cfg, args)
    table, text = out / "certificates.csv", out / "verify.txt"
    write_reports_csv(table, reports)
    failed = [r.name for r in reports if r.status == "fail"]
    body = "\n".join(r.summary() for r in reports)
    verdict = "FAIL: " + ", ".join(failed) if failed else "PASS"
    text.write_text(body + f"\n\noverall: {verdict}\n")
    print(body)
    print(f"overall: {verdict}")
    _write_manifest(out, "verify", cfg, _inputs(args, ckpt), [table, text])
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_path(cfg: RunConfig, args) -> int:
    ckpt = _require_checkpoint(args)
    sol = load_solution(ckpt)
    if sol.mode == "L1plusAlpha":
        sol = scale_to_mass(sol, _mass(cfg, args))
    trange = args.trange or cfg.options.get("path.trange", "0.1:10:81")
    lo, hi, steps = _parse_trange(trange)
    pair, ham, alpha = sol.pair, sol.hamiltonian, sol.alpha
    out = _out_dir(cfg, args)
    path = out / "path.csv"
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "J0", "P"])
        for t in np.geomspace(lo, hi, steps):
            pt = dilation_path(pair, float(t))
            J, P = j_zero(pt, ham, alpha), pohozaev_p(pt, ham, alpha)
            wr.writerow([repr(float(t)), repr(float(J)), repr(float(P))])
    print(f"wrote {steps} path samples to {path}")
    _write_manifest(out, "path", cfg, _inputs(args, ckpt), [path])
    return EXIT_OK


COMMANDS = {"solve-aux": cmd_solve_aux, "solve-free": cmd_solve_free, "scale": cmd_scale,
            "gn": cmd_gn, "classify": cmd_classify, "verify": cmd_verify, "path": cmd_path}


def build_parser():
    parser = argparse.ArgumentParser(prog="ergodic-mfg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="key = value configuration file")
        p.add_argument("--out", help="output directory (overrides outputs.directory)")
        p.add_argument("--checkpoint", help="solution directory written by solve-free/scale")
        p.add_argument("--mass", type=float, help="target L1 mass")
        p.add_argument("--trange", help="LO:HI:STEPS log-spaced dilation range")
        p.add_argument("--r0", type=float, help="kinetic level of the geometry probe")
    return parser


def _threads():
    raw = os.environ.get("MFG_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        raise ConfigError(f"MFG_THREADS must be a positive integer, got {raw!r}")
    if k < 1:
        raise ConfigError("MFG_THREADS must be a positive integer")
    return k


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads = _threads()
        cfg = load_config(args.config)
    except OSError as err:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, MFGError) as err:
        print(f"error: invalid configuration: {err}", file=sys.stderr)
        return EXIT_CONFIG
    from threadpoolctl import threadpool_limits

    try:
        with threadpool_limits(limits=threads), warnings.catch_warnings():
            warnings.simplefilter("always")
            return COMMANDS[args.command](cfg, args)
    except SolverError as err:
        stage = f" (delta stage {err.stage})" if err.stage is not None else ""
        res = f", last residual {err.residual:.3e}" if err.residual is not None else ""
        print(f"error: solver failed{stage}: {err}{res}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as err:
        print(f"error: I/O failure: {err}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, MFGError, ValueError) as err:
        print(f"error: invalid input: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
