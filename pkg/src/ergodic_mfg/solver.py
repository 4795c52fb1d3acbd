"""Damped HJB/FP fixed point for the focusing ergodic MFG system.

For a weight ``delta`` and potential ``V`` the unknowns (u, m, mu) solve

    -lap u + H(grad u) + mu m^alpha = delta V + 1
     lap m + div(m grad H(grad u)) = 0
     ||m||_{L^(1+alpha)} = 1,    u(x_c) = 0

on a truncated box. Each outer iteration solves the HJB equation for the
current density by Newton's method, bordered by the scalar multiplier, and
then takes the density from the kernel of the adjoint of the linearized HJB
operator. That choice makes the discrete FP operator the exact transpose of
the discrete HJB linearization, so the energy identity mu = E_delta(m, w)
holds to rounding on every grid.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (ConvergenceError, DomainTooSmallError, InvalidInputError, OscillationError,
                     SchemeViolationError, SolverError, StepSizeError)
from .functionals import (PotentialSpec, ProblemSpec, energy_delta, eval_potential)
from .grid import (Domain, Field, FlowPair, VectorField, fp_residual, gradient,
                   gradient_operators, laplacian_operator, resample, write_field)
from .hamiltonian import HamiltonianSpec, eval_H, grad_H

__all__ = [
    "SolverConfig",
    "SolutionTriple",
    "BoundaryMassWarning",
    "solve_hjb_ergodic",
    "solve_fp_stationary",
    "solve_auxiliary_delta",
    "continue_delta_to_zero",
    "boundary_mass_fraction",
    "write_iteration_log",
]

FP_SCHEMES = ("adjoint", "sg")
MU_UPDATES = ("bordered", "secant")
LOG_COLUMNS = ("iter", "delta", "mu", "lambda_residual", "m_change", "energy")


class BoundaryMassWarning(UserWarning):
    """Noticeable mass near the truncation boundary."""


@dataclass(frozen=True)
class SolverConfig:
    damping: float = 0.5
    hjb_pseudo_time_step: float = 1e3
    fixed_point_tol: float = 1e-10
    multiplier_tol: float = 1e-8
    max_outer_iters: int = 400
    delta_schedule: tuple = (0.5, 0.2, 0.05, 0.0)
    recenter: bool = True
    stencil_order: int = 4
    fp_scheme: str = "adjoint"
    mu_update: str = "bordered"
    hjb_tol: float = 1e-9
    max_hjb_iters: int = 60
    boundary_mass_tol: float = 1e-6
    boundary_mass_fail: float = 1e-2

    def __post_init__(self):
        object.__setattr__(self, "delta_schedule", tuple(float(d) for d in self.delta_schedule))
        if not 0.0 < self.damping <= 1.0:
            raise InvalidInputError("damping must lie in (0, 1]")
        for name in ("hjb_pseudo_time_step", "fixed_point_tol", "multiplier_tol", "hjb_tol",
                     "boundary_mass_tol"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        if self.max_outer_iters < 1 or self.max_hjb_iters < 1:
            raise InvalidInputError("iteration caps must be positive")
        s = self.delta_schedule
        if not s or s[-1] != 0.0 or s[0] >= 1.0 or any(b >= a for a, b in zip(s, s[1:])):
            raise InvalidInputError(
                "delta_schedule must be strictly decreasing, start below 1 and end at 0")
        if self.stencil_order not in (2, 4):
            raise InvalidInputError("stencil_order must be 2 or 4")
        if self.fp_scheme not in FP_SCHEMES:
            raise InvalidInputError(f"fp_scheme must be one of {FP_SCHEMES}")
        if self.fp_scheme == "sg" and self.stencil_order != 2:
            raise InvalidInputError("the exponentially fitted FP scheme is second order only")
        if not self.boundary_mass_tol <= self.boundary_mass_fail <= 1.0:
            raise InvalidInputError("need boundary_mass_tol <= boundary_mass_fail <= 1")
        if self.mu_update not in MU_UPDATES:
            raise InvalidInputError(f"mu_update must be one of {MU_UPDATES}")


@dataclass(frozen=True, eq=False)
class SolutionTriple:
    u: Field
    m: Field
    multiplier: float
    hamiltonian: HamiltonianSpec
    alpha: float
    mode: str = "L1plusAlpha"
    delta: float = 0.0
    potential: PotentialSpec = PotentialSpec()
    lambda_residual: float = 0.0
    stencil_order: int = 4
    iterations: int = 0
    history: tuple = ()
    stages: tuple = field(default=())

    @property
    def domain(self) -> Domain:
        return self.m.domain

    @property
    def grad_u(self) -> VectorField:
        return gradient(self.u, self.stencil_order)

    @property
    def w(self) -> VectorField:
        p = self.grad_u.pointwise
        b = grad_H(self.hamiltonian, p)
        return VectorField(self.domain, np.moveaxis(-self.m.values[..., None] * b, -1, 0))

    @property
    def pair(self) -> FlowPair:
        return FlowPair(self.m, self.w)

    def hamiltonian_density(self) -> np.ndarray:
        """H(grad u) per cell."""
        return eval_H(self.hamiltonian, self.grad_u.pointwise)

    def fp_residual(self) -> float:
        return fp_residual(self.pair, self.stencil_order)

    def problem(self) -> ProblemSpec:
        return ProblemSpec(self.hamiltonian, self.alpha, self.domain, self.potential,
                           self.delta, self.mode)

    def energy(self) -> float:
        return energy_delta(self.pair, self.problem())

    def energy_gap(self) -> float:
        """Relative mismatch between the multiplier and the energy."""
        return abs(self.multiplier - self.energy()) / abs(self.multiplier)

    @property
    def e0(self) -> float:
        return self.multiplier


# --- discrete operators ------------------------------------------------------

class _Ops:
    def __init__(self, domain: Domain, order: int, ham: HamiltonianSpec):
        self.domain = domain
        self.order = order
        self.ham = ham
        self.G = gradient_operators(domain, order)
        self.L = laplacian_operator(domain, order)
        self.n = domain.size
        self.ic = domain.center_index
        self.pin = sp.csr_matrix(([1.0], ([0], [self.ic])), shape=(1, self.n))

    def grad(self, u):
        return np.stack([g @ u for g in self.G], axis=-1)

    def residual(self, u, s, col, f):
        p = self.grad(u)
        return -(self.L @ u) + eval_H(self.ham, p) + s * col - f

    def jacobian(self, u):
        b = grad_H(self.ham, self.grad(u))
        J = -self.L
        for d, g in enumerate(self.G):
            J = J + sp.diags(b[:, d]) @ g
        return J.tocsc()

    def bordered(self, J, col):
        K = sp.bmat([[J, sp.csc_matrix(col[:, None])], [self.pin, None]], format="csc")
        return K


def _newton(ops: _Ops, u, s, col, f, tol, max_iter, tau0, need_lu=False):
    """Solve -L u + H(G u) + s col = f with u[ic] = 0 for (u, s).

    Pseudo-time regularization (J + I/tau) is switched on only after a
    rejected Newton step. Returns (u, s, lu, iterations); ``lu`` factors the
    exact bordered Jacobian at the returned u when ``need_lu`` is set.
    """
    n = ops.n
    u = u - u[ops.ic]
    scale = max(1.0, float(np.max(np.abs(f))))
    r = ops.residual(u, s, col, f)
    rn = float(np.max(np.abs(r)))
    tau = math.inf
    eye = sp.identity(n, format="csc")
    for it in range(max_iter + 1):
        if not math.isfinite(rn):
            raise StepSizeError("HJB residual became non-finite", residual=rn)
        if rn <= tol * scale:
            lu = None
            if need_lu:
                lu = spla.splu(ops.bordered(ops.jacobian(u), col))
            return u, s, lu, it
        if it == max_iter:
            break
        J = ops.jacobian(u)
        while True:
            A = J if math.isinf(tau) else J + eye / tau
            lu = spla.splu(ops.bordered(A, col))
            step = lu.solve(np.concatenate([-r, [0.0]]))
            u_new, s_new = u + step[:n], s + step[n]
            r_new = ops.residual(u_new, s_new, col, f)
            rn_new = float(np.max(np.abs(r_new)))
            if math.isfinite(rn_new) and (rn_new < rn or rn_new <= tol * scale):
                break
            tau = tau0 if math.isinf(tau) else tau / 10.0
            if tau < 1e-12:
                raise StepSizeError("HJB pseudo-time step collapsed", residual=rn)
        if float(np.max(np.abs(u_new))) > 1e12:
            raise StepSizeError("HJB iterate blew up", residual=rn_new)
        u, s, r, rn = u_new, s_new, r_new, rn_new
        if not math.isinf(tau):
            tau = tau * 10.0
            if tau > 1e12:
                tau = math.inf
    raise ConvergenceError(f"HJB solve did not converge in {max_iter} steps (residual {rn:.3e})",
                           residual=rn)


def solve_hjb_ergodic(rhs: Field, spec: HamiltonianSpec, config: SolverConfig = None,
                      u0: Field = None):
    """Ergodic pair (u, lambda) of -lap u + H(grad u) + lambda = rhs, u(x_c) = 0."""
    config = config or SolverConfig()
    ops = _Ops(rhs.domain, config.stencil_order, spec)
    f = rhs.flat.astype(float)
    u = np.zeros(ops.n) if u0 is None else u0.flat.astype(float).copy()
    # start lambda at the running mean of the defect
    lam = float(np.mean(f + ops.L @ u - eval_H(spec, ops.grad(u))))
    u, lam, _, _ = _newton(ops, u, lam, np.ones(ops.n), f, config.hjb_tol,
                           config.max_hjb_iters, config.hjb_pseudo_time_step)
    return Field(rhs.domain, u.reshape(rhs.domain.shape)), float(lam)


def _bernoulli(z):
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-8
    zs = np.where(small, 1.0, z)
    return np.where(small, 1.0 - 0.5 * z, zs / np.expm1(zs))


def _sg_matrix(u, domain: Domain, ham: HamiltonianSpec):
    """Exponentially fitted FP operator; columns sum to zero, off-diagonals >= 0."""
    N, h, dim = domain.points_per_axis, domain.spacing, domain.dim
    idx = np.arange(domain.size).reshape(domain.shape)
    uu = u.reshape(domain.shape)
    G = gradient_operators(domain, 2)
    pc = np.stack([(g @ u).reshape(domain.shape) for g in G], axis=-1)
    rows, cols, vals = [], [], []
    for d in range(dim):
        if domain.boundary == "periodic":
            left = idx
            right = np.roll(idx, -1, axis=d)
            u_r = np.roll(uu, -1, axis=d)
            p_r = np.roll(pc, -1, axis=d)
            u_l, p_l = uu, pc
        else:
            sl_l = [slice(None)] * dim
            sl_r = [slice(None)] * dim
            sl_l[d] = slice(0, N - 1)
            sl_r[d] = slice(1, N)
            sl_l, sl_r = tuple(sl_l), tuple(sl_r)
            left, right = idx[sl_l], idx[sl_r]
            u_l, u_r = uu[sl_l], uu[sl_r]
            p_l, p_r = pc[sl_l], pc[sl_r]
        p_face = 0.5 * (p_l + p_r)
        p_face[..., d] = (u_r - u_l) / h
        b = grad_H(ham, p_face)[..., d]
        z = b * h
        bp, bm = _bernoulli(z).ravel(), _bernoulli(-z).ravel()
        left, right = left.ravel(), right.ravel()
        c = 1.0 / h ** 2
        rows += [left, left, right, right]
        cols += [right, left, right, left]
        vals += [c * bm, -c * bp, -c * bm, c * bp]
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(domain.size, domain.size))
    return A.tocsc()


def _check_density(y, what="FP"):
    top = float(np.max(y))
    if not np.all(np.isfinite(y)) or top <= 0:
        raise SchemeViolationError(f"{what} kernel is not a positive vector")
    if float(np.min(y)) < -1e-14 * top:
        raise SchemeViolationError(
            f"{what} kernel has negative entries (min {np.min(y):.3e}, max {top:.3e})")
    return np.maximum(y, 0.0)


def _kernel_from_lu(lu, n):
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    return lu.solve(rhs, trans="T")[:n]


def solve_fp_stationary(u: Field, spec: HamiltonianSpec, scheme: str = "sg",
                        order: int = 2) -> Field:
    """Stationary density of the drift grad H(grad u), unit mass.

    ``scheme="sg"`` uses exponentially fitted face fluxes (an M-matrix, so
    positivity is structural). ``scheme="adjoint"`` takes the kernel of the
    transpose of the linearized HJB operator at the given stencil order.
    """
    domain = u.domain
    n = domain.size
    if scheme == "sg":
        if order != 2:
            raise InvalidInputError("the exponentially fitted scheme is second order only")
        A = _sg_matrix(u.flat, domain, spec)
        K = sp.bmat([[A, sp.csc_matrix(np.ones((n, 1)))],
                     [sp.csr_matrix(np.ones((1, n))), None]], format="csc")
        rhs = np.zeros(n + 1)
        rhs[n] = 1.0
        y = spla.splu(K).solve(rhs)[:n]
    elif scheme == "adjoint":
        ops = _Ops(domain, order, spec)
        lu = spla.splu(ops.bordered(ops.jacobian(u.flat), np.ones(n)))
        y = _kernel_from_lu(lu, n)
    else:
        raise InvalidInputError(f"unknown FP scheme {scheme!r}")
    y = _check_density(y)
    y = y / (domain.cell_volume * np.sum(y))
    return Field(domain, y.reshape(domain.shape))


# --- outer iteration ----------------------------------------------------------

def boundary_mass_fraction(m: Field) -> float:
    """Share of the mass in the outer quarter of the box (sup-norm shell)."""
    d = m.domain
    xs = np.max(np.abs(d.points), axis=-1)
    tail = np.sum(m.values[xs >= 0.75 * d.half_width])
    return float(tail / np.sum(m.values))


def _normalize(m, alpha, vol):
    return m / (vol * np.sum(m ** (1.0 + alpha))) ** (1.0 / (1.0 + alpha))


def _recenter(m, u, domain):
    """Integer-cell shift moving the center of mass to the origin."""
    h = domain.spacing
    mm = m.reshape(domain.shape)
    uu = u.reshape(domain.shape)
    mesh = domain.mesh
    tot = np.sum(mm)
    for d in range(domain.dim):
        k = int(round(float(np.sum(mesh[d] * mm) / tot) / h))
        if k == 0:
            continue
        mm = _shift(mm, -k, d)
        uu = _shift(uu, -k, d)
    return mm.reshape(-1), uu.reshape(-1)


def _shift(a, k, axis):
    out = np.roll(a, k, axis=axis)
    idx = [slice(None)] * a.ndim
    edge = [slice(None)] * a.ndim
    if k > 0:
        idx[axis] = slice(0, k)
        edge[axis] = slice(k, k + 1)
    else:
        idx[axis] = slice(a.shape[axis] + k, None)
        edge[axis] = slice(a.shape[axis] + k - 1, a.shape[axis] + k)
    out[tuple(idx)] = out[tuple(edge)]
    return out


def _initial_density(domain, alpha):
    m = np.exp(-domain.radius ** 2).reshape(-1)
    return _normalize(m, alpha, domain.cell_volume)


def _secant_multiplier(ops, m, u, mu0, f, config, alpha):
    """Secant on mu -> lambda(mu) with a bisection fallback."""
    col = m ** alpha
    ones = np.ones(ops.n)

    def lam_of(mu, u_start):
        uu, lam, _, _ = _newton(ops, u_start, 0.0, ones, f - mu * col, config.hjb_tol,
                                config.max_hjb_iters, config.hjb_pseudo_time_step)
        return uu, lam

    u0, l0 = lam_of(mu0, u)
    mu1 = mu0 * (1.0 + 1e-2) if l0 > 0 else mu0 * (1.0 - 1e-2)
    u1, l1 = lam_of(mu1, u0)
    lo = hi = None  # lambda(lo) > 0 > lambda(hi); lambda decreases in mu
    for mu, lam in ((mu0, l0), (mu1, l1)):
        if lam > 0:
            lo = mu if lo is None else max(lo, mu)
        else:
            hi = mu if hi is None else min(hi, mu)
    for _ in range(60):
        if abs(l1) <= config.multiplier_tol:
            return mu1, u1, l1
        denom = l1 - l0
        cand = mu1 - l1 * (mu1 - mu0) / denom if denom != 0 else math.nan
        if lo is not None and hi is not None:
            if not (min(lo, hi) < cand < max(lo, hi)):
                cand = 0.5 * (lo + hi)
        elif not math.isfinite(cand) or cand <= 0:
            cand = mu1 * 2.0 if l1 > 0 else mu1 / 2.0
        mu0, l0 = mu1, l1
        mu1 = cand
        u1, l1 = lam_of(mu1, u1)
        if l1 > 0:
            lo = mu1 if lo is None else max(lo, mu1)
        else:
            hi = mu1 if hi is None else min(hi, mu1)
    raise ConvergenceError("multiplier secant did not converge", residual=abs(l1))


def _fp_from(ops, u, lu, config):
    if config.fp_scheme == "adjoint":
        if lu is None:
            lu = spla.splu(ops.bordered(ops.jacobian(u), np.ones(ops.n)))
        return _check_density(_kernel_from_lu(lu, ops.n))
    A = _sg_matrix(u, ops.domain, ops.ham)
    n = ops.n
    K = sp.bmat([[A, sp.csc_matrix(np.ones((n, 1)))],
                 [sp.csr_matrix(np.ones((1, n))), None]], format="csc")
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    return _check_density(spla.splu(K).solve(rhs)[:n])


def _run_stage(problem: ProblemSpec, config: SolverConfig, m, u, mu, log, iter0=0):
    domain = problem.domain
    alpha = problem.alpha
    vol = domain.cell_volume
    ops = _Ops(domain, config.stencil_order, problem.hamiltonian)
    f = np.ones(ops.n)
    if problem.delta > 0:
        f = f + problem.delta * eval_potential(problem.potential, domain.points).reshape(-1)
    theta = config.damping
    m = _normalize(m, alpha, vol)
    prev = []
    strikes = 0
    change = math.inf
    lam = 0.0
    for k in range(config.max_outer_iters):
        if config.mu_update == "bordered":
            u, mu, lu, _ = _newton(ops, u, mu, m ** alpha, f, config.hjb_tol,
                                   config.max_hjb_iters, config.hjb_pseudo_time_step,
                                   need_lu=config.fp_scheme == "adjoint")
        else:
            w = -m[:, None] * grad_H(problem.hamiltonian, ops.grad(u))
            mu0 = _energy_flat(problem, m, w, f, vol)
            mu, u, lam = _secant_multiplier(ops, m, u, mu0 if k == 0 else mu, f, config, alpha)
            lu = None
        if mu <= 0 or not math.isfinite(mu):
            raise SolverError(f"multiplier left the positive axis (mu={mu})")
        m_new = _normalize(_fp_from(ops, u, lu, config), alpha, vol)
        change = float(np.max(np.abs(m_new - m)) / np.max(m_new))
        w = -m_new[:, None] * grad_H(problem.hamiltonian, ops.grad(u))
        energy = _energy_flat(problem, m_new, w, f, vol)
        log.append((iter0 + k, problem.delta, mu, lam, change, energy))
        if change <= config.fixed_point_tol and abs(lam) <= config.multiplier_tol:
            return m_new, u, mu, k + 1
        # period-2 detection on the raw fixed-point images
        prev.append(m_new)
        if len(prev) > 3:
            prev.pop(0)
        if len(prev) == 3:
            two = float(np.max(np.abs(prev[2] - prev[0])))
            one = float(np.max(np.abs(prev[2] - prev[1])))
            strikes = strikes + 1 if two < 0.1 * one else 0
            if strikes >= 3:
                theta *= 0.5
                strikes = 0
                prev.clear()
                if theta < 1.0 / 64.0:
                    raise OscillationError("period-2 cycle persists; reduce damping",
                                           residual=change)
        m = _normalize((1.0 - theta) * m + theta * m_new, alpha, vol)
    raise ConvergenceError(
        f"fixed point did not converge in {config.max_outer_iters} iterations "
        f"(last change {change:.3e})", residual=change)


def _energy_flat(problem, m, w, f, vol):
    from .hamiltonian import kinetic_density_array

    dens = kinetic_density_array(problem.hamiltonian, m, w, 1e-14 * m.max(),
                                 1e-14 * max(np.abs(w).max(), 1e-300))
    return float(vol * (np.sum(dens) + np.sum(f * m)))


def _warm_arrays(warm_start, domain, alpha):
    if warm_start is None:
        return _initial_density(domain, alpha), np.zeros(domain.size), 1.0
    m = np.maximum(resample(warm_start.m, domain).flat, 0.0)
    m = m + 1e-300
    u = resample(warm_start.u, domain).flat.copy()
    return _normalize(m, alpha, domain.cell_volume), u, float(warm_start.multiplier)


def _triple(problem, config, m, u, mu, log, iters, stages=()):
    domain = problem.domain
    u_field = Field(domain, u.reshape(domain.shape))
    m_field = Field(domain, m.reshape(domain.shape))
    # independent check of the ergodic constant left over at the final density
    rhs = np.ones(domain.size) - mu * m ** problem.alpha
    if problem.delta > 0:
        rhs = rhs + problem.delta * eval_potential(problem.potential, domain.points).reshape(-1)
    _, lam = solve_hjb_ergodic(Field(domain, rhs.reshape(domain.shape)), problem.hamiltonian,
                               config, u0=u_field)
    frac = boundary_mass_fraction(m_field)
    if frac > config.boundary_mass_fail:
        raise DomainTooSmallError(
            f"{frac:.1%} of the mass sits in the outer quarter of the box; enlarge half_width",
            residual=frac)
    if frac > config.boundary_mass_tol:
        warnings.warn(f"boundary mass fraction {frac:.2e} exceeds {config.boundary_mass_tol:.0e}; "
                      "enlarge the domain", BoundaryMassWarning, stacklevel=3)
    return SolutionTriple(u_field, m_field, float(mu), problem.hamiltonian, problem.alpha,
                          "L1plusAlpha", problem.delta, problem.potential, float(lam),
                          config.stencil_order, iters, tuple(log), tuple(stages))


def solve_auxiliary_delta(problem: ProblemSpec, config: SolverConfig = None,
                          warm_start: SolutionTriple = None) -> SolutionTriple:
    """Solve one stage of the delta-regularized system (any delta in [0, 1))."""
    config = config or SolverConfig()
    m, u, mu = _warm_arrays(warm_start, problem.domain, problem.alpha)
    if config.recenter and warm_start is not None:
        m, u = _recenter(m, u, problem.domain)
    log = []
    m, u, mu, iters = _run_stage(problem, config, m, u, mu, log)
    return _triple(problem, config, m, u, mu, log, iters)


def continue_delta_to_zero(problem: ProblemSpec, config: SolverConfig = None,
                           warm_start: SolutionTriple = None,
                           checkpoint_dir=None) -> SolutionTriple:
    """Sweep delta down the schedule, warm-starting each stage.

    The returned triple solves the potential-free system; its ``stages``
    records (delta, multiplier, energy) for every stage. On failure the
    raised error carries ``last_good`` (the previous stage triple or None).
    """
    config = config or SolverConfig()
    if problem.potential.kind == "zero" and any(d > 0 for d in config.delta_schedule):
        raise InvalidInputError("a coercive potential is needed for delta > 0 stages")
    m, u, mu = _warm_arrays(warm_start, problem.domain, problem.alpha)
    log, stages = [], []
    last = None
    total = 0
    for i, delta in enumerate(config.delta_schedule):
        stage = problem.with_delta(delta)
        if config.recenter and (i > 0 or warm_start is not None):
            m, u = _recenter(m, u, problem.domain)
        try:
            m, u, mu, iters = _run_stage(stage, config, m, u, mu, log, iter0=total)
        except SolverError as err:
            err.stage = delta
            err.last_good = last
            raise
        total += iters
        w = -m[:, None] * grad_H(problem.hamiltonian,
                                 _Ops(problem.domain, config.stencil_order,
                                      problem.hamiltonian).grad(u))
        f = np.ones(m.size)
        if delta > 0:
            f = f + delta * eval_potential(problem.potential, problem.domain.points).reshape(-1)
        stages.append((delta, float(mu), _energy_flat(stage, m, w, f, problem.domain.cell_volume)))
        if delta > 0:
            last = _stage_triple(stage, config, m, u, mu, log, total)
        if checkpoint_dir is not None:
            d = Path(checkpoint_dir)
            d.mkdir(parents=True, exist_ok=True)
            shape = problem.domain.shape
            write_field(d / f"stage_{i:02d}_u.fld", Field(problem.domain, u.reshape(shape)))
            write_field(d / f"stage_{i:02d}_m.fld", Field(problem.domain, m.reshape(shape)))
    final = problem.with_delta(0.0)
    return _triple(final, config, m, u, mu, log, total, stages)


def _stage_triple(problem, config, m, u, mu, log, iters):
    domain = problem.domain
    return SolutionTriple(Field(domain, u.reshape(domain.shape)),
                          Field(domain, m.reshape(domain.shape)), float(mu),
                          problem.hamiltonian, problem.alpha, "L1plusAlpha", problem.delta,
                          problem.potential, 0.0, config.stencil_order, iters, tuple(log))


def write_iteration_log(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(LOG_COLUMNS)
        for row in rows:
            wr.writerow([row[0], repr(float(row[1]))] + [repr(float(x)) for x in row[2:]])
