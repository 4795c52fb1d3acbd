import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ergodic_mfg import (INFEASIBLE, DegeneratePointWarning, HamiltonianSpec, InvalidInputError,
                         eval_H, eval_L, fenchel_check, grad_H, hamiltonian_bounds,
                         is_infeasible, kinetic_density, kinetic_density_array,
                         lagrangian_bounds)

gammas = st.sampled_from([1.2, 1.5, 2.0, 2.5, 3.0, 4.0])
coef = st.floats(0.2, 5.0)
vec2 = arrays(float, 2, elements=st.floats(-5.0, 5.0))


def specs():
    iso = st.builds(HamiltonianSpec.isotropic, gammas, coef)
    aniso = st.builds(lambda g, a, b: HamiltonianSpec.anisotropic(g, (a, b)), gammas, coef, coef)
    return st.one_of(iso, aniso)


def test_spec_validation():
    with pytest.raises(InvalidInputError):
        HamiltonianSpec(1.0)
    with pytest.raises(InvalidInputError):
        HamiltonianSpec(2.0, (1.0, 2.0), "isotropic-power")
    with pytest.raises(InvalidInputError):
        HamiltonianSpec(2.0, (0.0,))
    with pytest.raises(InvalidInputError):
        HamiltonianSpec(2.0, kind="cubic")
    with pytest.raises(InvalidInputError):
        eval_H(HamiltonianSpec(2.0), [np.nan, 0.0])
    with pytest.raises(InvalidInputError):
        HamiltonianSpec.anisotropic(2.0, (1.0, 2.0)).axis_coefficients(3)


def test_closed_forms():
    h = HamiltonianSpec.isotropic(2.0, 1.0)
    assert eval_H(h, [3.0, 4.0]) == pytest.approx(25.0)
    assert eval_L(h, [3.0, 4.0]) == pytest.approx(25.0 / 4.0)
    a = HamiltonianSpec.anisotropic(3.0, (1.0, 2.0))
    assert eval_H(a, [1.0, -1.0]) == pytest.approx(3.0)
    np.testing.assert_allclose(grad_H(a, [1.0, -1.0]), [3.0, -6.0])


def test_vectorized_shapes():
    h = HamiltonianSpec.isotropic(1.5)
    p = np.ones((4, 5, 2))
    assert eval_H(h, p).shape == (4, 5)
    assert grad_H(h, p).shape == (4, 5, 2)
    assert isinstance(eval_L(h, [1.0, 2.0]), float)


@settings(max_examples=200)
@given(specs(), vec2, vec2)
def test_fenchel_young_inequality(spec, p, q):
    lhs = eval_H(spec, p) + eval_L(spec, q)
    assert lhs >= float(p @ q) - 1e-9 * (1.0 + abs(lhs))


@settings(max_examples=200)
@given(specs(), vec2)
def test_fenchel_equality_at_gradient(spec, p):
    scale = 1.0 + eval_H(spec, p)
    assert fenchel_check(spec, p) <= 1e-12 * scale


@given(specs(), vec2, st.floats(0.1, 10.0))
def test_homogeneity(spec, p, s):
    g, gp = spec.gamma, spec.gamma_prime
    assert eval_H(spec, s * p) == pytest.approx(s ** g * eval_H(spec, p), rel=1e-12, abs=1e-300)
    assert eval_L(spec, s * p) == pytest.approx(s ** gp * eval_L(spec, p), rel=1e-12, abs=1e-300)


@given(specs(), vec2)
def test_numeric_legendre_matches_closed_form(spec, q):
    exact = eval_L(spec, q)
    assert eval_L(spec, q, method="numeric") == pytest.approx(exact, rel=1e-9, abs=1e-11)


@settings(max_examples=100)
@given(specs(), st.floats(0.0, 2 * math.pi))
def test_bounds_hold_on_unit_circle(spec, theta):
    e = np.array([math.cos(theta), math.sin(theta)])
    lo, hi = hamiltonian_bounds(spec, 2)
    h = eval_H(spec, e)
    assert lo * (1 - 1e-12) <= h <= hi * (1 + 1e-12)
    lo, hi = lagrangian_bounds(spec, 2)
    v = eval_L(spec, e)
    assert lo * (1 - 1e-12) <= v <= hi * (1 + 1e-12)


@pytest.mark.parametrize("gamma", [1.5, 3.0])
def test_bounds_are_attained(gamma):
    spec = HamiltonianSpec.anisotropic(gamma, (1.0, 3.0))
    th = np.linspace(0.0, 2 * math.pi, 200001)
    e = np.stack([np.cos(th), np.sin(th)], axis=-1)
    lo, hi = hamiltonian_bounds(spec, 2)
    vals = eval_H(spec, e)
    assert vals.min() == pytest.approx(lo, rel=1e-8)
    assert vals.max() == pytest.approx(hi, rel=1e-8)


def test_anisotropic_lower_constant_is_not_min_coefficient():
    # for gamma > 2 the diagonal direction sits below min(C) |p|^gamma
    spec = HamiltonianSpec.anisotropic(4.0, (1.0, 1.0))
    lo, _ = hamiltonian_bounds(spec, 2)
    assert lo == pytest.approx(0.5)
    assert eval_H(spec, [2 ** -0.5, 2 ** -0.5]) == pytest.approx(0.5)


def test_grad_at_origin_warns_for_subquadratic():
    spec = HamiltonianSpec.isotropic(1.5)
    with pytest.warns(DegeneratePointWarning):
        g = grad_H(spec, [0.0, 0.0])
    np.testing.assert_array_equal(g, [0.0, 0.0])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        grad_H(HamiltonianSpec.isotropic(2.0), [0.0, 0.0])


def test_kinetic_density_extended_values():
    spec = HamiltonianSpec.isotropic(2.0)
    assert kinetic_density(spec, 2.0, [2.0, 0.0]) == pytest.approx(2.0 * eval_L(spec, [-1.0, 0.0]))
    assert kinetic_density(spec, 0.0, [0.0, 0.0]) == 0.0
    val = kinetic_density(spec, 0.0, [1.0, 0.0])
    assert is_infeasible(val) and val is INFEASIBLE and val == math.inf
    assert is_infeasible(kinetic_density(spec, -1.0, [0.0, 0.0]))
    assert not is_infeasible(float("inf"))


def test_kinetic_density_array_rules():
    spec = HamiltonianSpec.isotropic(2.0)
    m = np.array([1.0, 1e-20, 0.0, 0.0, -1.0])
    w = np.array([[1.0], [1e-20], [0.0], [1.0], [0.0]])
    d = kinetic_density_array(spec, m, w, m_floor=1e-14, w_floor=1e-14)
    assert d[0] == pytest.approx(0.25)
    assert d[1] == 0.0          # empty cell below both floors
    assert d[2] == 0.0
    assert np.isinf(d[3]) and np.isinf(d[4])
    # a thin but moving tail keeps its exact finite cost
    d2 = kinetic_density_array(spec, np.array([1e-20]), np.array([[1e-12]]), 1e-14, 1e-14)
    assert d2[0] == pytest.approx(1e-24 / 4 / 1e-20)
