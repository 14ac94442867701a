import json
from fractions import Fraction

import numpy as np
import pytest

from levyren.kinetic import kinetic_adjacency_gamma
from levyren.mc_oracle import (DegenerateTestFunction, Identity, chunk_generators, field_values,
                               fine_second_moment_check, marginal_moment, mc_cumulants, moment_estimate,
                               poly_values, registered_identities, run_registry, sample_field, se_scaling,
                               weak_test)
from levyren.condexp import CoefficientPolynomial
from levyren.algebra import Polynomial
from levyren.reference import CauchyFamily, GammaFamily, GaussianFamily

GAMMA = GammaFamily(1, 1)


def test_chunking_is_deterministic():
    sizes = [s for _, s in chunk_generators(1, 250, 100)]
    assert sizes == [100, 100, 50]
    a = [rng.random(3) for rng, _ in chunk_generators(4, 20, 10)]
    b = [rng.random(3) for rng, _ in chunk_generators(4, 20, 10)]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    with pytest.raises(ValueError):
        list(chunk_generators(0, 0))


def test_field_sample_coarse():
    s = next(sample_field(GAMMA, 1, 2, 50, seed=3, chunk=50))
    assert s.fine.shape == (50, 8) and s.count == 50
    assert np.allclose(s.coarse(1), s.fine.reshape(50, 2, 4).mean(axis=2))
    assert np.allclose(s.coarse(3), s.fine)
    with pytest.raises(ValueError):
        s.coarse(0)
    with pytest.raises(ValueError):
        next(sample_field(CauchyFamily(1), 0, 1, 10, 0))


def test_evaluators():
    x = np.array([1.0, 2.0])
    assert np.allclose(poly_values(CoefficientPolynomial((1, 0, Fraction(1, 2))), x), [1.5, 3.0])
    cols = np.array([[1.0, 2.0], [3.0, 4.0]])
    p = Polynomial({(0, 1): Fraction(2), (): Fraction(1)})
    assert np.allclose(field_values(p, cols), [5.0, 25.0])


def test_marginal_moments():
    assert marginal_moment(GAMMA, 1, 2) == 3 and marginal_moment(GAMMA, 0, 2) == 2
    assert marginal_moment(GaussianFamily(1), 2, 4) == 48 and marginal_moment(GaussianFamily(1), 2, 3) == 0
    with pytest.raises(ValueError):
        marginal_moment(CauchyFamily(1), 0, 2)


@pytest.mark.parametrize("family", [GAMMA, GaussianFamily(1), GammaFamily(Fraction(1, 2), 2, 2)])
def test_registry_small_sample(family):
    reports = run_registry(family, count=20_000, seed=1, m=1)
    assert reports and all(r.passed for r in reports)
    ids = {r.identity for r in reports}
    assert "cond_exp_k2" in ids and "wick_martingale_k3" in ids
    assert json.loads(json.dumps(reports[0].to_json()))["pass"]


def test_wrong_identity_is_rejected():
    """A closed form off by ten percent must fail at moderate sample size."""
    base = registered_identities(GAMMA, 0, 1)[1]  # cond_exp_k2
    wrong = Identity("wrong", GAMMA, 0, 1, base.statistic, lambda xc: 1.1 * base.closed(xc))
    rep = weak_test(wrong, ("1",), count=200_000, seed=5)[0]
    assert not rep.passed


def test_workers_do_not_change_results():
    ident = registered_identities(GAMMA, 0, 1)[2]
    one = weak_test(ident, count=30_000, seed=9, chunk=5_000)
    four = weak_test(ident, count=30_000, seed=9, chunk=5_000, workers=4)
    assert [(r.estimate, r.se) for r in one] == [(r.estimate, r.se) for r in four]


def test_degenerate_test_function(monkeypatch):
    from levyren import mc_oracle

    monkeypatch.setitem(mc_oracle.TEST_FUNCTIONS, "0", lambda xc: np.zeros(xc.shape[0]))
    ident = registered_identities(GAMMA, 0, 1)[0]
    with pytest.raises(DegenerateTestFunction):
        weak_test(ident, ("0",), count=100, seed=0)
    with pytest.raises(ValueError):
        weak_test(ident, ("x^3",), count=100, seed=0)


def test_moment_estimate_and_concrete_check():
    est = moment_estimate(GAMMA, 0, 1, 2, 1, 100_000, 2)
    assert est.passed and est.exact == 3.0
    check = fine_second_moment_check(count=100_000, seed=4)
    assert check.passed and check.ratio == Fraction(3, 2)


def test_mc_cumulants_small():
    form = kinetic_adjacency_gamma(2, 1)
    out = mc_cumulants(form, GAMMA, 1, orders=(1, 2), count=40_000, seed=3)
    assert all(r.passed for reps in out.values() for r in reps)
    zero = mc_cumulants(form, GAMMA, 1, orders=(1,), count=1000, seed=3, coupling=0,
                        test_functions=("x_i",))
    with pytest.raises(ValueError):
        mc_cumulants(form, GAMMA, 1, orders=(4,), count=10)
    assert zero[1][0].estimate == 0 and zero[1][0].passed


def test_se_scaling_is_flat():
    ident = registered_identities(GAMMA, 0, 1)[1]
    vals = se_scaling(ident, counts=(5_000, 50_000), seed=2)
    assert 0.5 < vals[0] / vals[1] < 2


@pytest.mark.slow
@pytest.mark.parametrize("family", [GAMMA, GaussianFamily(1)])
def test_registry_million(family):
    reports = run_registry(family, count=10 ** 6, seed=0, m=1, workers=4)
    failed = [(r.identity, r.test_function) for r in reports if not r.passed]
    assert not failed


@pytest.mark.slow
def test_concrete_check_million():
    assert fine_second_moment_check(count=10 ** 6, seed=0).passed
