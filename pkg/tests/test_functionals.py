import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergodic_mfg import (INFEASIBLE, DegeneratePairError, Domain, DomainError, Field, FlowPair,
                         HamiltonianSpec, InvalidInputError, PotentialSpec, ProblemSpec,
                         VectorField, dilation_path, energy_delta, energy_zero, eval_L,
                         eval_potential, gn_quotient, integrate, j_zero, kinetic_integral,
                         pohozaev_p, pohozaev_residuals, potential_field, power_integral)


def gaussian_pair(dim=1, N=64, R=6.0, drift=1.0):
    d = Domain(dim, R, N)
    r2 = sum(x ** 2 for x in d.mesh)
    m = np.exp(-r2)
    w = np.stack([drift * x * m for x in d.mesh])
    return FlowPair(Field(d, m), VectorField(d, w))


def test_problem_validation():
    # gamma = 3 in 2-D: Sobolev-critical exponent 3
    h, d = HamiltonianSpec.isotropic(3.0), Domain(2, 1.0, 16)
    ProblemSpec(h, 2.9, d)
    with pytest.raises(DomainError):
        ProblemSpec(h, 3.0, d)
    with pytest.raises(DomainError):
        ProblemSpec(h, 1.0, d, delta=1.0)
    with pytest.raises(DomainError):
        ProblemSpec(h, 1.0, d, PotentialSpec("zero"), delta=0.5)
    with pytest.raises(InvalidInputError):
        ProblemSpec(h, 1.0, d, mass_mode="L2")
    with pytest.raises(InvalidInputError):
        PotentialSpec("power", b=0.0)
    p = ProblemSpec(h, 1.0, d, PotentialSpec("log"))
    assert p.with_delta(0.3).delta == 0.3 and p.with_delta(0.3).potential.kind == "log"


def test_potentials():
    assert eval_potential(PotentialSpec("power", 2.0, 3.0), [1.0, 1.0]) == pytest.approx(
        2.0 * 2 ** 1.5)
    assert eval_potential(PotentialSpec("log"), 0.0) == 0.0
    d = Domain(2, 1.0, 16)
    assert np.all(potential_field(PotentialSpec(), d).values == 0.0)


def test_functionals_of_gaussian():
    pair = gaussian_pair(drift=2.0)
    h = HamiltonianSpec.isotropic(2.0)
    # m L(-w/m) = m |2x|^2 / 4 = x^2 m
    A = kinetic_integral(pair, h)
    assert A == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-10)
    assert power_integral(pair.m, 1.0) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-10)
    M = integrate(pair.m)
    assert energy_zero(pair, h) == pytest.approx(A + M)
    assert j_zero(pair, h, 1.0) == pytest.approx(A - power_integral(pair.m, 1.0) / 2)
    spec = ProblemSpec(h, 1.0, pair.domain, PotentialSpec("power"), delta=0.5)
    x = pair.domain.centers
    assert energy_delta(pair, spec) == pytest.approx(A + M + 0.5 * np.sum(x ** 2 * pair.m.values)
                                                     * pair.domain.spacing)
    assert pohozaev_p(pair, h, 1.0) == pytest.approx(A - 0.25 * power_integral(pair.m, 1.0))


def test_infeasible_propagates():
    d = Domain(1, 1.0, 16)
    m = np.ones(16)
    m[3] = 0.0
    w = np.zeros((1, 16))
    w[0, 3] = 1.0
    pair = FlowPair(Field(d, m), VectorField(d, w))
    h = HamiltonianSpec.isotropic(2.0)
    assert kinetic_integral(pair, h) is INFEASIBLE
    assert energy_zero(pair, h) is INFEASIBLE
    assert j_zero(pair, h, 1.0) is INFEASIBLE
    assert pohozaev_p(pair, h, 1.0) is INFEASIBLE
    with pytest.raises(DegeneratePairError):
        gn_quotient(pair, h, 1.0)
    neg = FlowPair(Field(d, -np.ones(16)), VectorField(d, np.zeros((1, 16))))
    assert kinetic_integral(neg, h) is INFEASIBLE


def test_gn_quotient_degenerate_without_flux():
    pair = gaussian_pair(drift=0.0)
    with pytest.raises(DegeneratePairError):
        gn_quotient(pair, HamiltonianSpec.isotropic(2.0), 2.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 2), st.sampled_from([1.5, 2.0, 3.0]), st.floats(0.5, 3.0),
       st.floats(0.2, 5.0), st.floats(0.2, 5.0))
def test_dilation_identities(dim, gamma, alpha, s, t):
    h = HamiltonianSpec.isotropic(gamma, 0.7)
    pair = gaussian_pair(dim, N=32)
    gp, n = h.gamma_prime, dim
    scaled = dilation_path(pair, t)
    assert integrate(scaled.m) == pytest.approx(integrate(pair.m), rel=1e-12)
    assert kinetic_integral(scaled, h) == pytest.approx(t ** gp * kinetic_integral(pair, h),
                                                        rel=1e-10)
    assert power_integral(scaled.m, alpha) == pytest.approx(
        t ** (n * alpha) * power_integral(pair.m, alpha), rel=1e-10)
    # the quotient is invariant under mass-preserving dilations and amplitude changes
    q0 = gn_quotient(pair, h, alpha)
    amp = FlowPair(pair.m.dilate(1.0, s), pair.w.dilate(1.0, s))
    assert gn_quotient(scaled, h, alpha) == pytest.approx(q0, rel=1e-10)
    assert gn_quotient(amp, h, alpha) == pytest.approx(q0, rel=1e-10)


def test_kinetic_matches_cellwise_lagrangian():
    pair = gaussian_pair(2, N=24, drift=0.3)
    h = HamiltonianSpec.anisotropic(3.0, (1.0, 2.0))
    m, w = pair.m.values, pair.w.pointwise
    expected = pair.domain.cell_volume * np.sum(m * eval_L(h, -w / m[..., None]))
    assert kinetic_integral(pair, h) == pytest.approx(expected, rel=1e-13)


def test_pohozaev_residuals_of_solution(small_solution):
    r1, r2 = pohozaev_residuals(small_solution)
    assert r1 < 1e-3 and r2 < 1e-3
