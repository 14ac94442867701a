from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levyren.algebra import pochhammer
from levyren.reference import CauchyFamily, GammaFamily, GaussianFamily
from levyren.wick import (WickPolynomial, martingale_check, martingale_residual, wick_by_subtraction,
                          wick_closed_form, wick_gamma, wick_gaussian)


def test_gaussian_examples():
    assert wick_gaussian(0, 4).descending() == [1, 0, -6, 0, 3]
    assert wick_gaussian(0, 2).coeffs == (-1, 0, 1)
    assert wick_gaussian(1, 2).coeffs == (-2, 0, 1)
    assert wick_gaussian(2, 3, sigma0=Fraction(1, 2)).coeffs == (0, -6, 0, 1)
    with pytest.raises(ValueError):
        wick_gaussian(0, 5)


def test_gamma_examples():
    v = wick_gamma(0, 3, 1)
    assert v.is_monomial and v.coeffs[-1] == 1
    # alpha_1 = 1/2: (1)_2 / (2^2 (1/2)_2) = 2 / (4 * 3/4)
    assert wick_gamma(1, 2, 1).coeffs == (0, 0, Fraction(2, 3))
    with pytest.raises(ValueError):
        wick_gamma(0, 0, 1)


def test_polynomial_validation():
    with pytest.raises(ValueError):
        WickPolynomial("gamma", 0, 2, (0, 1))
    with pytest.raises(ValueError):
        WickPolynomial("gamma", 0, 1, (1, 0))
    with pytest.raises(ValueError):
        wick_closed_form(CauchyFamily(1), 0, 2)


@pytest.mark.parametrize("n", range(4))
@pytest.mark.parametrize("k", range(1, 7))
@pytest.mark.parametrize("alpha", [Fraction(1), Fraction(1, 3), Fraction(5, 2)])
def test_gamma_subtraction_matches_closed_form(n, k, alpha):
    fam = GammaFamily(alpha, 1)
    got, diag = wick_by_subtraction(fam, n, k)
    assert got == wick_closed_form(fam, n, k)
    assert diag.terms[k]


@pytest.mark.parametrize("n", range(4))
@pytest.mark.parametrize("k", range(1, 5))
@pytest.mark.parametrize("sigma", [Fraction(1), Fraction(3, 2)])
def test_gaussian_subtraction_matches_hermite(n, k, sigma):
    fam = GaussianFamily(sigma)
    got, diag = wick_by_subtraction(fam, n, k)
    assert got == wick_closed_form(fam, n, k)
    if k >= 2:
        assert diag.dropped[k - 2]


@pytest.mark.parametrize("fam,kmax", [(GammaFamily(1, 1), 6), (GammaFamily(Fraction(2, 3), 1, 2), 6),
                                      (GaussianFamily(1), 4), (GaussianFamily(2, 2), 4)])
@pytest.mark.parametrize("n,m", [(0, 1), (1, 2), (2, 1), (0, 3)])
def test_martingale(fam, kmax, n, m):
    for k in range(1, kmax + 1):
        assert martingale_check(fam, n, m, k) == 0
        assert all(c == 0 for c in martingale_residual(fam, n, m, k).coeffs)


@settings(max_examples=20, deadline=None)
@given(st.fractions(Fraction(1, 10), Fraction(5)), st.integers(0, 5), st.integers(1, 6))
def test_gamma_level_expectation_is_constant(alpha, n, k):
    """E[V^n_k(x^n)] equals the level-0 raw moment for every n."""
    fam = GammaFamily(alpha, 1)
    r_n = Fraction(fam.r) ** n
    raw = pochhammer(fam.alpha(n), k) * r_n ** k  # beta_n = r^-n
    assert wick_gamma(n, k, alpha).coeffs[k] * raw == pochhammer(alpha, k)


def test_gaussian_level_expectation_vanishes():
    for n in range(4):
        var = GaussianFamily(1).sigma(n)
        normal_moments = [1, 0, var, 0, 3 * var ** 2]
        for k in range(1, 5):
            assert sum(c * normal_moments[j] for j, c in enumerate(wick_gaussian(n, k).coeffs)) == 0


def test_gamma_martingale_by_sampling():
    """Splitting a Gamma(1, 1) coarse value over two children leaves V_3 unbiased."""
    rng = np.random.default_rng(5)
    x = rng.gamma(1.0, 1.0, size=500_000)
    share = rng.beta(0.5, 0.5, size=x.size)
    child = 2 * x * share
    fine, coarse = wick_gamma(1, 3, 1), wick_gamma(0, 3, 1)
    for weight in (np.ones_like(x), x):
        diff = (fine(child) - coarse(x)) * weight
        assert abs(diff.mean()) < 5 * diff.std() / np.sqrt(diff.size)
