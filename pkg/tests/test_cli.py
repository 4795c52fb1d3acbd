import hashlib
import json
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from ergodic_mfg import (Domain, HamiltonianSpec, PotentialSpec, ProblemSpec, SolverConfig,
                         load_solution, save_solution)
from ergodic_mfg.cli import (ConfigError, RunConfig, main, parse_config, serialize_config)

BASE = """\
problem.dim = 1
problem.half_width = 12.0
problem.points_per_axis = 256
problem.alpha = 3.0
hamiltonian.gamma = 2.0
potential.kind = power
solver.damping = 1.0
solver.fixed_point_tol = 1e-9
"""


def write_cfg(tmp_path, extra="", name="run.cfg"):
    p = tmp_path / name
    p.write_text(BASE + extra)
    return str(p)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 2), st.floats(1.0, 50.0), st.integers(16, 512), st.floats(0.1, 0.9),
       st.sampled_from([1.5, 2.0, 3.0]), st.sampled_from(["L1", "L1plusAlpha"]),
       st.floats(0.1, 1.0), st.booleans())
def test_config_round_trip(dim, R, N, ratio, gamma, mode, damping, recenter):
    gp = gamma / (gamma - 1.0)
    ham = HamiltonianSpec.isotropic(gamma, 1.5)
    problem = ProblemSpec(ham, ratio * gp / dim, Domain(dim, R, N), PotentialSpec("log", 2.0),
                          0.25, mode, 3.0)
    cfg = RunConfig(problem, SolverConfig(damping=damping, recenter=recenter,
                                          delta_schedule=(0.3, 0.0)),
                    "somewhere", {"path.trange": "0.5:2:9", "geometry.r0": 0.1})
    assert parse_config(serialize_config(cfg)) == cfg


@pytest.mark.parametrize("text,msg", [
    ("problem.colour = red\n", "unknown key"),
    ("problem.dim = 1\n", "duplicate"),
    ("solver.recenter = perhaps\n", "bad value"),
    ("solver.damping\n", "expected"),
    ("problem.alpha = -1\n", "duplicate"),
    ("path.trange = 1:2\n", "LO:HI:STEPS"),
    ("solver.delta_schedule = 0.5, 0.6, 0\n", "delta_schedule"),
])
def test_config_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(BASE + text)


def test_missing_required_keys():
    with pytest.raises(ConfigError, match="missing required"):
        parse_config("problem.dim = 1\n")


def test_comments_and_defaults():
    cfg = parse_config("# header\n" + BASE + "\nsolver.hjb_tol = 1e-10  # tighter\n")
    assert cfg.solver.hjb_tol == 1e-10 and cfg.problem.domain.boundary == "no-flux"
    assert cfg.outputs == "out" and cfg.problem.hamiltonian.kind == "isotropic-power"


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def free_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    cfg = write_cfg(tmp)
    out = tmp / "free"
    assert main(["solve-free", "--config", cfg, "--out", str(out)]) == 0
    return tmp, cfg, out


def test_solve_free_outputs(free_run):
    _, cfg, out = free_run
    names = {p.name for p in out.iterdir()}
    assert {"u.fld", "m.fld", "summary.txt", "iterations.csv", "functionals.csv",
            "manifest.json", "stages"} <= names
    man = json.loads((out / "manifest.json").read_text())
    assert man["command"] == "solve-free"
    assert man["inputs"]["config"]["sha256"] == _sha(type(out)(cfg))
    for rel, digest in man["outputs"].items():
        assert _sha(out / rel) == digest
    assert "stages/stage_03_m.fld" in man["outputs"]
    assert parse_config(man["config"]) == parse_config(open(cfg).read())


def test_downstream_commands(free_run, capsys):
    tmp, cfg, out = free_run
    ck = str(out)
    assert main(["verify", "--config", cfg, "--checkpoint", ck, "--out", str(tmp / "v")]) == 0
    text = (tmp / "v" / "verify.txt").read_text()
    assert "overall: PASS" in text and "[PASS] nls_oracle" in text and "[PASS] geometry" in text
    assert main(["scale", "--config", cfg, "--checkpoint", ck, "--mass", "2",
                 "--out", str(tmp / "s")]) == 0
    scaled = load_solution(tmp / "s")
    assert scaled.mode == "L1"
    assert main(["gn", "--config", cfg, "--checkpoint", str(tmp / "s"),
                 "--out", str(tmp / "g")]) == 0
    rows = (tmp / "g" / "gn.csv").read_text().splitlines()
    gap = float([r for r in rows if r.startswith("relative_gap")][0].split(",")[1])
    assert gap < 1e-2
    assert main(["classify", "--config", cfg, "--out", str(tmp / "c")]) == 0
    assert "regime = supercritical" in (tmp / "c" / "regime.txt").read_text()
    assert main(["path", "--config", cfg, "--checkpoint", ck, "--trange", "0.5:2:7",
                 "--out", str(tmp / "p")]) == 0
    lines = (tmp / "p" / "path.csv").read_text().splitlines()
    assert lines[0] == "t,J0,P" and len(lines) == 8
    t, J, P = (list(c) for c in zip(*[map(float, ln.split(",")) for ln in lines[1:]]))
    # the dilation energy peaks at the solution itself, where P changes sign
    k = J.index(max(J))
    assert t[k] == pytest.approx(1.0) and P[k - 1] > 0 > P[k + 1]


def test_verify_reports_failure(free_run, tmp_path):
    _, cfg, out = free_run
    sol = load_solution(out)
    bad = replace(sol, multiplier=sol.multiplier * 1.1)
    save_solution(tmp_path / "bad", bad)
    code = main(["verify", "--config", cfg, "--checkpoint", str(tmp_path / "bad"),
                 "--out", str(tmp_path / "v")])
    assert code == 1
    assert "overall: FAIL" in (tmp_path / "v" / "verify.txt").read_text()


def test_solve_aux(tmp_path):
    cfg = write_cfg(tmp_path, "problem.delta = 0.5\n")
    assert main(["solve-aux", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert load_solution(tmp_path / "a").delta == 0.5
    assert (tmp_path / "a" / "iterations.csv").exists()


def test_exit_codes(tmp_path, monkeypatch, capsys):
    cfg = write_cfg(tmp_path)
    # solve-aux needs a positive delta
    assert main(["solve-aux", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    # unknown key
    assert main(["classify", "--config", write_cfg(tmp_path, "bad.key = 1\n", "b.cfg")]) == 2
    # out of scope exponent
    oos = tmp_path / "o.cfg"
    oos.write_text(BASE.replace("problem.dim = 1", "problem.dim = 2").replace(
        "hamiltonian.gamma = 2.0", "hamiltonian.gamma = 3.0").replace(
        "problem.alpha = 3.0", "problem.alpha = 3.5"))
    assert main(["classify", "--config", str(oos)]) == 2
    # missing config file
    assert main(["classify", "--config", str(tmp_path / "none.cfg")]) == 3
    # output path blocked by a file
    (tmp_path / "blocked").write_text("")
    assert main(["classify", "--config", cfg, "--out", str(tmp_path / "blocked")]) == 3
    # solver failure
    fail = write_cfg(tmp_path, "solver.max_outer_iters = 1\n", "f.cfg")
    assert main(["solve-free", "--config", fail, "--out", str(tmp_path / "f")]) == 1
    assert "delta stage 0.5" in capsys.readouterr().err
    # checkpoint missing for a command that needs one
    assert main(["verify", "--config", cfg, "--out", str(tmp_path / "v")]) == 2
    monkeypatch.setenv("MFG_THREADS", "zero")
    assert main(["classify", "--config", cfg, "--out", str(tmp_path / "c")]) == 2


def test_deterministic_checkpoints(tmp_path, monkeypatch):
    monkeypatch.setenv("MFG_THREADS", "1")
    cfg = write_cfg(tmp_path)
    hashes = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["solve-free", "--config", cfg, "--out", str(out)]) == 0
        hashes.append(json.loads((out / "manifest.json").read_text())["outputs"])
    assert hashes[0] == hashes[1]
