from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levyren.kinetic import (cond_exp_t_app, cond_exp_t_app_brute, gamma_counterterm_coefficient,
                             internal_degree_sum, internal_degree_sum_formula, kinetic_adjacency_gamma,
                             shift_polynomial, shift_polynomial_closed, t_app, t_app_form, t_ren_form,
                             t_ren_gamma, t_ren_gaussian, t_ren_martingale_residual)
from levyren.reference import CauchyFamily, GammaFamily, GaussianFamily

FAMILIES = [GammaFamily(1, 1), GammaFamily(Fraction(1, 3), 1), GaussianFamily(1), GammaFamily(1, 1, 2),
            GaussianFamily(2, 2)]


def test_t_app_hand_values():
    assert t_app(1, [0, 1], 1) == 2  # two torus edges, (1/2) * 4 * 1 each, over r = 2
    assert t_app(1, [0, 1], 1, convention="ordered") == 4
    assert t_app(0, [5], 1) == 0
    assert t_app(2, [1, 1, 1, 1], 1) == 0
    # d = 1, n = 2: differences 1, 1, 1, -3 around the ring
    assert t_app(2, [0, 1, 2, 3], 1) == Fraction(16 * 12, 2 * 4)
    with pytest.raises(ValueError):
        t_app(1, [0, 1, 2], 1)
    with pytest.raises(ValueError):
        t_app(1, [0, 1], 1, convention="half")


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 2), st.integers(0, 2), st.data())
def test_quadratic_form_matches_direct_sum(d, n, data):
    size = 2 ** (d * n)
    x = data.draw(st.lists(st.integers(-4, 4), min_size=size, max_size=size))
    form = t_app_form(n, d)
    assert form.evaluate(x) == t_app(n, x, d)
    mat = form.matrix()
    assert all(sum(row) == 0 for row in mat)
    quad = sum(x[i] * mat[i][j] * x[j] for i in range(size) for j in range(size))
    assert quad * form.prefactor == t_app(n, x, d)


@pytest.mark.parametrize("fam", FAMILIES)
@pytest.mark.parametrize("m", [1, 2, 3])
def test_shift_closed_form(fam, m):
    assert shift_polynomial(fam, 1, m) == shift_polynomial_closed(fam, 1, m)


def test_shift_example():
    assert shift_polynomial(GammaFamily(1, 1), 1, 1).coeffs == (0, 0, 2)
    assert shift_polynomial(GammaFamily(1, 1), 1, 0).coeffs == (0, 0, 0)


@pytest.mark.parametrize("fam", FAMILIES)
@pytest.mark.parametrize("n,m", [(1, 1), (1, 2), (2, 1), (2, 2)])
def test_kinetic_identity(fam, n, m):
    if fam.d == 2 and n + m > 3:
        pytest.skip("window too large for exact enumeration")
    assert cond_exp_t_app(fam, n, m).holds()


def test_identity_breaks_on_unit_torus():
    """At n = 0 the single coarse site neighbours itself, so the fine torus wraps inside one cell."""
    assert not cond_exp_t_app(GammaFamily(1, 1), 0, 1).holds()


def _conditional_fine(fam, coarse, m, rng, count):
    r_m = fam.r ** m
    cols = []
    for x in coarse:
        if isinstance(fam, GammaFamily):
            share = rng.dirichlet([float(fam.alpha(1 + m))] * r_m, size=count)
            block = r_m * x * share
        else:
            z = rng.normal(0.0, np.sqrt(float(fam.sigma(1 + m))), size=(count, r_m))
            block = x + z - z.mean(axis=1, keepdims=True)
        cols.extend(block.T)
    return cols


@pytest.mark.parametrize("fam", [GammaFamily(1, 1), GaussianFamily(1)])
def test_kinetic_identity_by_conditional_sampling(fam):
    """Fix a level-1 field, draw children from the exact conditional law, average T_app^2."""
    coarse = [0.7, 1.9]
    fine = _conditional_fine(fam, coarse, 1, np.random.default_rng(8), 400_000)
    vals = t_app(2, fine, 1)
    predicted = float(cond_exp_t_app(fam, 1, 1).predicted().evaluate(coarse))
    assert abs(vals.mean() - predicted) < 5 * vals.std() / np.sqrt(vals.size)


@pytest.mark.parametrize("fam", FAMILIES)
@pytest.mark.parametrize("n,m", [(1, 1), (1, 2), (2, 1)])
def test_t_ren_is_martingale(fam, n, m):
    if fam.d == 2 and n + m > 3:
        pytest.skip("window too large for exact enumeration")
    assert t_ren_martingale_residual(fam, n, m).terms == {}


def test_t_ren_values():
    x = [Fraction(1), Fraction(2)]
    # alpha_1 = 1/2: counterterm 2 / (3/2) = 4/3, times (1 + 4) / 2
    assert t_ren_gamma(1, x, 1) == Fraction(1, 2) * 2 - Fraction(4, 3) * Fraction(5, 2)
    assert t_ren_gaussian(1, x, 1) == Fraction(1, 2) * 2 - 2 * 2
    assert t_ren_form(GammaFamily(1, 1), 1).evaluate(x) == t_ren_gamma(1, x, 1)
    assert t_ren_form(GaussianFamily(1), 1).evaluate(x) == t_ren_gaussian(1, x, 1)
    with pytest.raises(ValueError):
        t_ren_form(CauchyFamily(1), 1)


def test_counterterm_and_adjacency():
    assert gamma_counterterm_coefficient(0, 1, 1) == Fraction(1, 2)
    assert gamma_counterterm_coefficient(0, 1, 2) == 1
    assert gamma_counterterm_coefficient(2, 1, 1) == 4 / Fraction(5, 4)
    q = kinetic_adjacency_gamma(1, 1, 1)
    assert q.coefficient(0, 0) == Fraction(2, 3) and q.coefficient(1, 0) == -4
    x = [Fraction(3), Fraction(-1)]
    assert q.evaluate(x) == t_ren_gamma(1, x, 1)


@pytest.mark.parametrize("d,m", [(1, 1), (1, 3), (2, 1), (2, 2), (3, 1), (3, 2)])
def test_internal_degree_sum(d, m):
    assert internal_degree_sum(d, m) == internal_degree_sum_formula(d, m)


def test_brute_force_is_polynomial_in_coarse_sites():
    poly = cond_exp_t_app_brute(GammaFamily(1, 1), 1, 1)
    assert all(len(key) == 2 and max(key) < 2 for key in poly.terms)
