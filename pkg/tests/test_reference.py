import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levyren.reference import (CauchyFamily, GammaFamily, GaussianFamily, GenericFamily, HypothesisFailure,
                               LevyCharacteristic, char_fn, check_hypothesis1, coarse_grain, density,
                               make_family, renormalizability_coefficients, sample, verify_compatibility)

GRID = np.linspace(-10, 10, 200)


def test_char_fn_examples():
    assert char_fn(GaussianFamily(1), 0, 0.0) == pytest.approx(1.0)
    xi = np.linspace(-3, 3, 13)
    assert np.allclose(char_fn(GammaFamily(1, 1), 0, xi), 1 / (1 - 1j * xi))
    for n in (0, 2, 5):
        assert np.allclose(char_fn(CauchyFamily(1), n, xi), np.exp(-np.abs(xi)))


def test_level_parameters():
    g = GammaFamily(1, 1, 1)
    assert g.alpha(2) == Fraction(1, 4) and g.beta(2) == Fraction(1, 4)
    assert GammaFamily(3, 2, 2).alpha(1) == Fraction(3, 4)
    assert GaussianFamily(2, 1).sigma(3) == 16


@pytest.mark.parametrize("family", [GammaFamily(1, 1), GaussianFamily(1), CauchyFamily(1),
                                    GammaFamily(Fraction(1, 3), 2, 2), GaussianFamily(2, 2)])
@pytest.mark.parametrize("n", range(7))
def test_compatibility(family, n):
    assert verify_compatibility(family, n, GRID) < 1e-10


def test_compatibility_rejects_bad_grid():
    with pytest.raises(ValueError):
        verify_compatibility(GammaFamily(1, 1), 0, [0.0, np.inf])


def test_density_examples():
    assert density(GaussianFamily(1), 0, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert density(GammaFamily(1, 1), 0, 1.0) == pytest.approx(math.exp(-1))
    assert density(CauchyFamily(1), 0, 0.0) == pytest.approx(1 / math.pi)
    assert density(GammaFamily(1, 1), 0, -1.0) == 0.0


@pytest.mark.parametrize("family,level", [(GammaFamily(1, 1), 0), (GammaFamily(1, 1), 2),
                                          (GaussianFamily(1), 1)])
def test_density_integrates_to_one(family, level):
    from scipy import integrate

    lo = 0 if isinstance(family, GammaFamily) else -np.inf
    val, _ = integrate.quad(lambda x: family.density(np.array([x]), level)[0], lo, np.inf, limit=400)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_sample_gamma_small_shape_mean():
    fam = GammaFamily(1, 1)
    x = sample(fam, 1, 10 ** 6, seed=3)  # shape 1/2, rate 1/2
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - 1.0) < 4 * se


def test_sample_gaussian_variance():
    fam = GaussianFamily(1)
    x = sample(fam, 1, 10 ** 6, seed=4)  # sigma_1 = 2
    v = x ** 2
    assert abs(v.mean() - 2.0) < 4 * v.std() / math.sqrt(x.size)


def test_sample_deterministic_and_validated():
    fam = GammaFamily(1, 1)
    assert np.array_equal(sample(fam, 0, 50, seed=7), sample(fam, 0, 50, seed=7))
    with pytest.raises(ValueError):
        sample(fam, 0, 0, seed=1)
    with pytest.raises(ValueError):
        GammaFamily(-1, 1)


def test_coarse_grain_examples():
    assert np.allclose(coarse_grain(np.full((3, 8), 2.5), 4), 2.5)
    assert np.allclose(coarse_grain([1.0, 3.0, 5.0, 7.0], 2), [2.0, 6.0])
    with pytest.raises(ValueError):
        coarse_grain([1.0, 2.0, 3.0], 2)


def _moment_z(x, k, exact):
    v = x ** k
    return abs(v.mean() - exact) / (v.std() / math.sqrt(v.size))


def test_gamma_block_average_closure():
    """Averages of two Gamma(1/2, 1/2) draws follow Gamma(1, 1): mean 1, variance 1, third cumulant 2."""
    fam = GammaFamily(1, 1, 1)
    fine = fam.sample(1, (10 ** 6, 2), seed=11)
    coarse = coarse_grain(fine, 2)[:, 0]
    for k, exact in ((1, 1.0), (2, 2.0), (3, 6.0)):  # raw moments of Gamma(1, 1)
        assert _moment_z(coarse, k, exact) < 5
    assert float(fam.mean(0)) == 1.0 and float(fam.variance(0)) == 1.0 and float(fam.third_cumulant(0)) == 2.0


def test_gaussian_block_average_variance():
    fam = GaussianFamily(1, 1)
    fine = fam.sample(2, (200_000, 4), seed=5)  # variance 4 each
    coarse = coarse_grain(fine, 4)[:, 0]  # level 0: variance 1
    assert _moment_z(coarse, 2, 1.0) < 5


# -- first-order renormalizability --------------------------------------------

@pytest.mark.parametrize("alpha", [Fraction(1), Fraction(1, 3), Fraction(5, 2)])
@pytest.mark.parametrize("i", [1, 2, 3])
def test_gamma_certificate(alpha, i):
    fam = GammaFamily(alpha, 1)
    cert = check_hypothesis1(fam, i)
    expected = [0] * (i + 2)
    expected[i + 1] = alpha / (alpha + i)
    assert fam.hypothesis1_coefficients(i) == expected
    assert np.allclose(cert.coefficients, [float(c) for c in expected], atol=1e-10)
    assert cert.valid and not cert.ill_conditioned


@pytest.mark.parametrize("i", [1, 2, 3])
def test_gaussian_certificate(i):
    fam = GaussianFamily(1)
    cert = check_hypothesis1(fam, i, tol=1e-8)
    assert np.allclose(cert.coefficients, [float(c) for c in fam.hypothesis1_coefficients(i)], atol=1e-8)


@pytest.mark.parametrize("i", [1, 2, 3])
@pytest.mark.parametrize("tol", [1e-3, 1e-6, 1e-8])
def test_cauchy_fails(i, tol):
    with pytest.raises(HypothesisFailure):
        check_hypothesis1(CauchyFamily(1), i, tol=tol)
    cert = check_hypothesis1(CauchyFamily(1), i, tol=tol, raise_on_failure=False)
    assert not cert.valid and cert.experimental


def test_generic_family_matches_gamma():
    base = GammaFamily(1, 1)
    fam = GenericFamily(lambda xi: 1 / (1 - 1j * xi), 1, "gamma-as-generic")
    assert fam.experimental
    assert verify_compatibility(fam, 1, GRID) < 1e-10
    assert np.allclose(fam.char_fn(GRID, 2), base.char_fn(GRID, 2))
    rows = renormalizability_coefficients(fam, 3, tol=1e-4)
    exact = renormalizability_coefficients(base, 3)
    for got, want in zip(rows, exact):
        assert np.allclose(np.real(got), [float(c) for c in want], atol=1e-4)


def test_levy_characteristic():
    g = GaussianFamily(2)
    lc = g.levy_characteristic()
    xi = np.linspace(-2, 2, 9)
    assert np.allclose(lc.char_fn(xi), g.char_fn(xi, 0))
    jumps = LevyCharacteristic(jump_intensity=1.0, jump_distribution="exponential", jump_params={"rate": 1.0})
    assert np.allclose(jumps.char_fn(xi), np.exp(1 / (1 - 1j * xi) - 1))
    with pytest.raises(ValueError):
        LevyCharacteristic(diffusion=-1)
    with pytest.raises(ValueError):
        LevyCharacteristic(jump_intensity=1.0, jump_distribution="cauchy")


def test_make_family():
    assert make_family("gamma", alpha=2, beta=3) == GammaFamily(2, 3)
    assert isinstance(make_family("Cauchy"), CauchyFamily)
    with pytest.raises(ValueError):
        make_family("poisson")


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.integers(0, 6))
def test_gamma_compatibility_property(alpha, beta, n):
    assert verify_compatibility(GammaFamily(alpha, beta), n, GRID) < 1e-10
