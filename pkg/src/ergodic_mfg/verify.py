"""Independent a-posteriori certificates for computed solutions."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .errors import DomainError, InvalidInputError
from .exponents import regime_of
from .functionals import (PotentialSpec, eval_potential, j_zero, kinetic_integral,
                          pohozaev_residuals)
from .grid import Field, gradient, integrate
from .hamiltonian import eval_H, eval_L, is_infeasible

__all__ = [
    "Residual",
    "CertificateReport",
    "check_pohozaev",
    "check_decay",
    "check_gradient_bound",
    "nls_ground_state",
    "nls_oracle",
    "geometry_probe",
    "write_reports_csv",
]


@dataclass(frozen=True)
class Residual:
    label: str
    value: float
    bound: float = None
    sense: str = "<="

    @property
    def ok(self) -> bool:
        if self.bound is None:
            return True
        v = self.value
        if not math.isfinite(v):
            return False
        if self.sense == "<=":
            return v <= self.bound
        if self.sense == ">=":
            return v >= self.bound
        if self.sense == ">":
            return v > self.bound
        if self.sense == "==":
            return v == self.bound
        raise InvalidInputError(f"unknown comparison {self.sense!r}")


@dataclass(frozen=True)
class CertificateReport:
    name: str
    residuals: tuple
    metadata: dict = field(default_factory=dict)
    inconclusive: bool = False
    note: str = ""

    @property
    def passed(self) -> bool:
        return not self.inconclusive and all(r.ok for r in self.residuals)

    @property
    def status(self) -> str:
        if self.inconclusive:
            return "inconclusive"
        return "pass" if self.passed else "fail"

    def get(self, label) -> float:
        for r in self.residuals:
            if r.label == label:
                return r.value
        raise KeyError(label)

    def csv_rows(self):
        for r in self.residuals:
            bound = "" if r.bound is None else repr(float(r.bound))
            yield [self.name, r.label, repr(float(r.value)), r.sense if r.bound is not None else "",
                   bound, "yes" if r.ok else "no"]

    def write_csv(self, path) -> None:
        write_reports_csv(path, [self])

    def summary(self) -> str:
        meta = ", ".join(f"{k}={v}" for k, v in self.metadata.items())
        lines = [f"[{self.status.upper()}] {self.name}" + (f" ({meta})" if meta else "")]
        for r in self.residuals:
            cmp = "" if r.bound is None else f" {r.sense} {r.bound:.3g}"
            lines.append(f"  {r.label:<28s} {r.value: .6e}{cmp}{'' if r.ok else '  <-- violated'}")
        if self.note:
            lines.append(f"  note: {self.note}")
        return "\n".join(lines)


CSV_HEADER = ["certificate", "residual", "value", "comparison", "bound", "ok"]


def write_reports_csv(path, reports) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(CSV_HEADER)
        for rep in reports:
            wr.writerows(rep.csv_rows())


def _meta(sol):
    return {"N": sol.domain.points_per_axis, "dim": sol.domain.dim, "alpha": sol.alpha,
            "gamma": sol.hamiltonian.gamma, "delta": sol.delta}


# --- Pohozaev -----------------------------------------------------------------

def _cellwise_identity(sol):
    m = sol.m.values
    p = sol.grad_u.pointwise
    Hd = eval_H(sol.hamiltonian, p)
    mask = m > 0
    w = sol.w.pointwise
    Ld = np.zeros_like(m)
    Ld[mask] = eval_L(sol.hamiltonian, -w[mask] / m[mask][:, None])
    g = sol.hamiltonian.gamma
    scale = max(float(np.max((g - 1.0) * Hd[mask])), 1e-300)
    return float(np.max(np.abs(Ld[mask] - (g - 1.0) * Hd[mask]))) / scale


def check_pohozaev(sol, alpha=None, coarse=None, tol=1e-3, min_order=1.5) -> CertificateReport:
    """Both integral identities, their kinetic cross-check and the cell-wise
    Fenchel identity; with ``coarse`` also the observed convergence order."""
    alpha = sol.alpha if alpha is None else alpha
    r1, r2 = pohozaev_residuals(sol, alpha)
    ham = sol.hamiltonian
    A = kinetic_integral(sol.pair, ham)
    K = (ham.gamma - 1.0) * float(sol.domain.cell_volume
                                  * np.sum(sol.m.values * sol.hamiltonian_density()))
    kin = math.inf if is_infeasible(A) else abs(A - K) / max(abs(K), 1e-300)
    res = [Residual("r1", r1, tol), Residual("r2", r2, tol),
           Residual("kinetic_vs_hamiltonian", kin, 1e-8),
           Residual("cellwise_identity", _cellwise_identity(sol), 1e-10)]
    if coarse is not None:
        c1, c2 = pohozaev_residuals(coarse, alpha)
        ratio = math.log(coarse.domain.spacing / sol.domain.spacing)
        res.append(Residual("order_r1", math.log(c1 / r1) / ratio, min_order, ">="))
        res.append(Residual("order_r2", math.log(c2 / r2) / ratio, min_order, ">="))
    return CertificateReport("pohozaev", tuple(res), _meta(sol))


# --- exponential decay ----------------------------------------------------------

def check_decay(m: Field, window=(0.5, 0.75), r2_min=0.99) -> CertificateReport:
    """Least-squares fit of log m against |x| over a radial shell.

    The shell spans ``window`` in units of the half-width, minus the two
    outermost cells. The default stops at 0.75 R: next to the walls the
    homogeneous Neumann condition on u bends log m over a layer of width
    O(1), which is a property of the truncation, not of the tail.

    Passes when the slope is negative, R^2 exceeds ``r2_min`` and the
    exponential model fits better than a power law log m ~ -p log|x|; the
    last test separates exponential from algebraic tails, whose logarithm is
    nearly linear over a short window too. Reports (kappa1, kappa2) with
    m ~ kappa1 exp(-kappa2 |x|).
    """
    d = m.domain
    R, h = d.half_width, d.spacing
    r = d.radius
    sel = (r >= window[0] * R) & (r <= min(window[1] * R, R - 2.0 * h))
    meta = {"N": d.points_per_axis, "dim": d.dim, "R": R}
    vals = m.values[sel]
    if vals.size < 4:
        return CertificateReport("decay", (), meta, True, "tail window holds too few cells")
    if np.min(vals) <= 1e-290:
        return CertificateReport("decay", (), meta, True,
                                 "tail below the floating-point floor; shrink the domain")
    x, y = r[sel], np.log(vals)
    slope, icpt = np.polyfit(x, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_exp = float(np.sum((y - (slope * x + icpt)) ** 2))
    ps, pi = np.polyfit(np.log(x), y, 1)
    ss_pow = float(np.sum((y - (ps * np.log(x) + pi)) ** 2))
    r2 = 1.0 - ss_exp / ss_tot if ss_tot > 0 else 0.0
    res = (Residual("decay_rate", float(-slope), 0.0, ">"),
           Residual("r_squared", r2, r2_min, ">="),
           Residual("exp_over_power_misfit", ss_exp / max(ss_pow, 1e-300), 1.0, "<="),
           Residual("kappa1", float(math.exp(icpt))),
           Residual("kappa2", float(-slope)))
    return CertificateReport("decay", res, meta)


# --- gradient bounds ------------------------------------------------------------

def _gradient_constant(u, potential, delta, gamma, order):
    g = np.linalg.norm(gradient(u, order).pointwise, axis=-1)
    V = eval_potential(potential, u.domain.points)
    return float(np.max(g / (1.0 + delta * V) ** (1.0 / gamma)))


def check_gradient_bound(u: Field, potential: PotentialSpec, delta, gamma, u_refined=None,
                         order=2, C4_values=(0.0, 1.0, 10.0), rtol=0.1) -> CertificateReport:
    """Smallest C with |grad u| <= C (1 + delta V)^(1/gamma) on the grid.

    With ``u_refined`` (the same problem on a finer grid) the certificate
    passes when both constants agree within ``rtol``; with a single grid it
    only requires a finite constant. The lower-bound constants
    C3(C4) = min (u + C4) / V^(1/gamma) are reported for each C4.
    """
    C = _gradient_constant(u, potential, delta, gamma, order)
    res = [Residual("C", C)]
    V = eval_potential(potential, u.domain.points)
    pos = V > 0
    for C4 in C4_values:
        c3 = float(np.min((u.values[pos] + C4) / V[pos] ** (1.0 / gamma))) if np.any(pos) else math.nan
        res.append(Residual(f"C3_at_C4={C4:g}", c3))
    if u_refined is None:
        res.append(Residual("C_finite", 0.0 if math.isfinite(C) else math.inf, 0.0))
    else:
        Cf = _gradient_constant(u_refined, potential, delta, gamma, order)
        res.append(Residual("C_refined", Cf))
        if C == 0 and Cf == 0:
            dev = 0.0
        else:
            dev = abs(Cf / C - 1.0) if C > 0 else math.inf
        res.append(Residual("refinement_deviation", dev, rtol))
    meta = {"N": u.domain.points_per_axis, "dim": u.domain.dim, "gamma": gamma, "delta": delta}
    return CertificateReport("gradient_bound", tuple(res), meta)


# --- NLS ground state oracle ------------------------------------------------------

def _shoot_1d(alpha, r_max=30.0):
    """Ground state of -Q'' + Q = Q^(2 alpha + 1) on the line by shooting."""
    p = 2.0 * alpha + 1.0

    def rhs(r, y):
        return [y[1], y[0] - np.sign(y[0]) * abs(y[0]) ** p]

    def crossed(r, y):
        return y[0]
    crossed.terminal = True

    def turned(r, y):
        return y[1]
    turned.terminal = True
    turned.direction = 1

    def fate(q0):
        sol = solve_ivp(rhs, (0.0, r_max), [q0, 0.0], method="DOP853", rtol=1e-13,
                        atol=1e-15, events=(crossed, turned))
        if sol.t_events[0].size:
            return 1, sol.t_events[0][0]
        if sol.t_events[1].size:
            return -1, sol.t_events[1][0]
        return 0, r_max

    lo, hi = 1.0 + 1e-12, 2.0
    while fate(hi)[0] <= 0:
        hi *= 2.0
        if hi > 1e6:
            raise DomainError("shooting failed to bracket the ground state")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        side, _ = fate(mid)
        if side > 0:
            hi = mid
        else:
            lo = mid
    q0 = lo
    # integrate the undershooting branch until it departs from the homoclinic orbit
    sol = solve_ivp(rhs, (0.0, r_max), [q0, 0.0], method="DOP853", rtol=1e-13, atol=1e-15,
                    dense_output=True, events=(crossed, turned))
    r_end = sol.t[-1]
    rs = np.linspace(0.0, r_end, 20001)
    Q = sol.sol(rs)[0]
    # keep the part where Q decays like e^{-r} cleanly and continue analytically
    cut = float(min(r_end, 0.5 * r_end + 2.0, 12.0))
    return q0, _radial_profile(rs, Q, cut)


def _radial_profile(rs, Q, cut):
    keep = rs <= cut
    spline = CubicSpline(rs[keep], Q[keep])
    q_cut = float(spline(cut))
    k = -float(spline(cut, 1)) / q_cut

    def profile(r):
        r = np.abs(np.asarray(r, dtype=float))
        inner = spline(np.minimum(r, cut))
        return np.where(r <= cut, inner, q_cut * np.exp(-k * (r - cut)))
    return profile


def _gradient_flow_radial(alpha, n, r_max=24.0, nr=6000, tol=1e-13, max_iter=2000):
    """Ground state of -lap Q + Q = Q^(2 alpha + 1) in R^n, radial.

    Normalized gradient flow for the Weinstein-type problem: minimize
    int |grad v|^2 + v^2 subject to int v^(2 alpha + 2) = 1 with fully implicit
    steps, then rescale the minimizer to solve the equation with unit
    coefficient.
    """
    p = 2.0 * alpha + 1.0
    h = r_max / nr
    r = (np.arange(nr) + 0.5) * h
    rf = np.arange(nr + 1) * h  # faces
    wgt = r ** (n - 1)
    # finite-volume -lap with zero flux at r = 0 and v = 0 beyond r_max
    a = rf[1:-1] ** (n - 1) / h ** 2
    diag = np.zeros(nr)
    diag[:-1] += a
    diag[1:] += a
    diag[-1] += 2.0 * rf[-1] ** (n - 1) / h ** 2
    Lmat = (sp.diags(1.0 / wgt) @ sp.diags([-a, diag, -a], [-1, 0, 1])).tocsc()
    A = (Lmat + sp.identity(nr)).tocsc()
    lu = spla.splu(A)
    v = np.exp(-r ** 2)

    def norm(v):
        return (h * np.sum(wgt * np.abs(v) ** (p + 1))) ** (1.0 / (p + 1))

    v = v / norm(v)
    for it in range(max_iter):
        v_new = lu.solve(np.abs(v) ** p)
        v_new = v_new / norm(v_new)
        diff = float(np.max(np.abs(v_new - v)))
        v = v_new
        if diff < tol:
            break
    else:
        raise DomainError("normalized gradient flow did not converge")
    kappa = float(h * np.sum(wgt * v * (A @ v)))
    Q = kappa ** (1.0 / (p - 1.0)) * v
    rs = np.concatenate([[0.0], r])
    # even extension gives Q'(0) = 0 for the spline
    Qs = np.concatenate([[Q[0] + (Q[0] - Q[1]) / 3.0], Q])
    return float(Qs[0]), _radial_profile(rs, Qs, 0.6 * r_max)


def nls_ground_state(alpha, n):
    """(Q(0), profile) of the positive radial solution of -lap Q + Q = Q^(2 alpha + 1)."""
    if n == 1:
        return _shoot_1d(alpha)
    if n == 2:
        return _gradient_flow_radial(alpha, n)
    raise InvalidInputError("oracle supports dimensions 1 and 2")


def _radial_moment(profile, n, power, r_max=60.0):
    from scipy.integrate import quad
    if n == 1:
        val, _ = quad(lambda r: 2.0 * profile(r) ** power, 0.0, r_max, limit=400)
    else:
        val, _ = quad(lambda r: 2.0 * math.pi * r * profile(r) ** power, 0.0, r_max, limit=400)
    return val


def nls_oracle(problem, sol, tol=1e-3, log_tol=1e-3, bulk=1e-6) -> CertificateReport:
    """Compare a quadratic-Hamiltonian solution with the NLS ground state.

    With H = C|p|^2 the substitution m = v^2 turns the system into
    -lap v + a v = b v^(2 alpha + 1), where (a, b) = (C, C mu) for the
    L^(1+alpha) normalization and (C kappa, C) with kappa = -lambda for the
    L^1 normalization. The oracle builds v from the unit ground state Q via
    v(x) = (a/b)^(1/(2 alpha)) Q(sqrt(a) x), so the multiplier of the triple
    fixes v. The oracle multiplier comes from the constraint of the mode
    (mass or L^(1+alpha) norm).
    """
    ham = sol.hamiltonian
    if ham.gamma != 2.0 or not ham.is_isotropic:
        raise DomainError("the NLS reduction needs an isotropic quadratic Hamiltonian")
    if sol.delta != 0.0:
        raise DomainError("the NLS reduction applies to the potential-free system")
    C = ham.coefficients[0]
    alpha = sol.alpha
    n = sol.domain.dim
    meta = _meta(sol)
    try:
        q0, Q = nls_ground_state(alpha, n)
    except DomainError as err:
        return CertificateReport("nls_oracle", (), meta, True, f"oracle failed: {err}")
    if sol.mode == "L1plusAlpha":
        a, b = C, C * sol.multiplier
        I = _radial_moment(Q, n, 2.0 * alpha + 2.0)
        # int v^(2a+2) = (C mu_o)^(-(a+1)/a) C^((a+1)/a) C^(-n/2) I = 1
        mu_oracle = (C ** (-n / 2.0) * I) ** (alpha / (alpha + 1.0))
        mult, mult_oracle = sol.multiplier, mu_oracle
    else:
        kappa = -sol.multiplier
        a, b = C * kappa, C
        I = _radial_moment(Q, n, 2.0)
        M = integrate(sol.m)
        # M = C^(-1/alpha) beta^(1/alpha - n/2) I with beta = C kappa
        e = 1.0 / alpha - n / 2.0
        beta = (M * C ** (1.0 / alpha) / I) ** (1.0 / e)
        mult, mult_oracle = sol.multiplier, -beta / C
    m = sol.m.values
    pts = sol.domain.points
    tot = np.sum(m)
    x0 = np.array([np.sum(pts[..., k] * m) / tot for k in range(n)])
    rr = np.linalg.norm(pts - x0, axis=-1)
    v = (a / b) ** (1.0 / (2.0 * alpha)) * Q(math.sqrt(a) * rr)
    dens = float(np.max(np.abs(m - v ** 2)) / np.max(m))
    mult_err = abs(mult - mult_oracle) / abs(mult_oracle)
    mask = m >= bulk * m.max()
    s = sol.u.values[mask] + np.log(m[mask]) / (2.0 * C)
    log_res = 0.5 * float(s.max() - s.min())
    res = (Residual("density_sup_rel", dens, tol),
           Residual("multiplier_rel", mult_err, tol),
           Residual("log_relation", log_res, log_tol),
           Residual("profile_peak_Q0", q0))
    return CertificateReport("nls_oracle", res, meta)


# --- mountain-pass geometry -------------------------------------------------------

def geometry_probe(pair, R0, hamiltonian, alpha, t_range=(1e-3, 1e3), samples=241):
    """Necessary-condition check of the mountain-pass geometry along dilations.

    Along (t^n m(t x), t^(n+1) w(t x)) the kinetic level t^g' A crosses R0
    and 2 R0 at t_1 < t_2. The probe checks J0(t_1) > 0, that the largest
    sampled J0 on [t_lo, t_1] stays strictly below J0(t_2), and that J0 rises
    then falls with one sign change of its discrete derivative.
    """
    from .scaling import dilation_path

    n = pair.domain.dim
    gp = hamiltonian.gamma_prime
    if regime_of(alpha, gp, n) != "supercritical":
        raise DomainError("the geometry probe needs a mass-supercritical exponent")
    A = kinetic_integral(pair, hamiltonian)
    meta = {"N": pair.domain.points_per_axis, "dim": n, "alpha": alpha,
            "gamma": hamiltonian.gamma, "R0": R0}
    if is_infeasible(A) or A <= 0:
        raise DomainError("pair needs a finite positive kinetic term")
    t1 = (R0 / A) ** (1.0 / gp)
    t2 = (2.0 * R0 / A) ** (1.0 / gp)
    lo, hi = t_range
    if t2 > hi or t1 < lo:
        return CertificateReport(
            "geometry", (), meta, True,
            f"kinetic levels are crossed at t={t1:.3g}, {t2:.3g}, outside the sampled range "
            f"[{lo:g}, {hi:g}]; choose R0 between {A * lo ** gp:.3g} and {A * hi ** gp / 2:.3g}")

    def J(t):
        return j_zero(dilation_path(pair, t), hamiltonian, alpha)

    ts = np.geomspace(lo, hi, samples)
    Js = np.array([J(t) for t in ts])
    J1, J2 = J(t1), J(t2)
    sup_inner = max(float(np.max(Js[ts <= t1], initial=-math.inf)), J1)
    dJ = np.diff(Js)
    signs = np.sign(dJ[dJ != 0])
    changes = int(np.sum(signs[1:] != signs[:-1]))
    res = (Residual("J0_at_R0", J1, 0.0, ">"),
           Residual("gap_2R0_minus_sup_R0", J2 - sup_inner, 0.0, ">"),
           Residual("derivative_sign_changes", float(changes), 1.0, "=="),
           Residual("t_R0", t1), Residual("t_2R0", t2))
    return CertificateReport("geometry", res, meta)
