from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, strategies as st

from levyren.algebra import Polynomial, double_factorial_odd, i_power, multinomial, pochhammer
from levyren.lattice import (EPS, FineWindow, LatticeConfig, ancestor, children, coarse_neighbors,
                             coords_to_site, degree_count_formula, degree_histogram, flat_index, parent,
                             shift, site_from_flat, site_to_coords, stratum, stratum_index, stratum_size,
                             torus_edges, within_region_neighbors)


def test_config_basics():
    cfg = LatticeConfig(2)
    assert cfg.r == 4 and cfg.eps == Fraction(1, 2) == EPS
    assert cfg.sidelength(3) == Fraction(1, 8)
    assert cfg.cell_volume(2) == Fraction(1, 16)
    with pytest.raises(ValueError):
        LatticeConfig(0)


def test_children_examples():
    assert children((1,), LatticeConfig(1)) == [(1, 1), (1, 2)]
    cfg = LatticeConfig(2)
    assert len(children((), cfg)) == 4
    grand = [g for c in children((3,), cfg) for g in children(c, cfg)]
    assert len(grand) == 16 and len(set(grand)) == 16


@given(st.integers(1, 3), st.lists(st.integers(1, 8), max_size=4))
def test_parent_of_child(d, raw):
    cfg = LatticeConfig(d)
    site = tuple(1 + (x - 1) % cfg.r for x in raw)
    for c in children(site, cfg):
        assert parent(c) == site
        assert ancestor(c, len(site)) == site


@given(st.integers(1, 3), st.integers(0, 4), st.data())
def test_flat_roundtrip(d, n, data):
    cfg = LatticeConfig(d)
    f = data.draw(st.integers(0, cfg.r ** n - 1))
    site = site_from_flat(f, n, cfg)
    assert flat_index(site, cfg) == f
    assert coords_to_site(site_to_coords(site, cfg), n, cfg) == site


def test_descendants_are_contiguous():
    cfg = LatticeConfig(2)
    for f in range(cfg.r ** 3):
        site = site_from_flat(f, 3, cfg)
        assert flat_index(ancestor(site, 1), cfg) == f // cfg.r ** 2


def test_coarse_neighbors_examples():
    cfg = LatticeConfig(1)
    assert coarse_neighbors((1,), cfg) == [(2,), (2,)]
    cfg2 = LatticeConfig(2)
    for site in cfg2.sites(2):
        assert len(coarse_neighbors(site, cfg2)) == 4


def test_coarse_neighbors_symmetric():
    cfg = LatticeConfig(1)
    for site in cfg.sites(3):
        for nb in coarse_neighbors(site, cfg):
            assert site in coarse_neighbors(nb, cfg)


@pytest.mark.parametrize("d,n", [(1, 0), (1, 2), (2, 1), (2, 2), (3, 1)])
def test_coarse_neighbor_count(d, n):
    cfg = LatticeConfig(d)
    assert all(len(coarse_neighbors(s, cfg)) == 2 * d for s in cfg.sites(n))
    assert len(torus_edges(n, cfg)) == d * cfg.r ** n


def test_within_region_histogram_examples():
    assert degree_histogram(FineWindow(2, 2)) == {4: 4, 3: 8, 2: 4}
    w = FineWindow(1, 1)
    assert all(len(within_region_neighbors(w, p)) == 1 for p in w.points())
    w = FineWindow(2, 1)
    assert all(len(within_region_neighbors(w, p)) == 2 for p in w.points())


@pytest.mark.parametrize("d,m", [(d, m) for d in (1, 2, 3) for m in (1, 2, 3, 4) if d * m <= 9])
def test_degree_histogram_formula(d, m):
    hist = degree_histogram(FineWindow(d, m))
    for k in range(d + 1):
        assert hist.get(d + k, 0) == degree_count_formula(d, m, k)


def test_stratum_examples():
    w = FineWindow(2, 1)
    assert [len(stratum(w, ell)) for ell in (0, 1, 2)] == [1, 2, 1]
    assert sum(len(stratum(FineWindow(3, 2), ell)) for ell in range(4)) == 64
    for d in (1, 2, 3):
        w = FineWindow(d, 2)
        assert stratum(w, 0) == [(4,) * d]
    with pytest.raises(ValueError):
        stratum(FineWindow(2, 1), 3)


@pytest.mark.parametrize("d,m", [(d, m) for d in (1, 2, 3) for m in (1, 2, 3, 4) if d * m <= 9])
def test_strata_partition_window(d, m):
    w = FineWindow(d, m)
    sizes = [len(stratum(w, ell)) for ell in range(d + 1)]
    assert sizes == [stratum_size(d, m, ell) for ell in range(d + 1)]
    assert sum(comb(d, ell) * (2 ** m - 1) ** ell for ell in range(d + 1)) == 2 ** (m * d) == len(w)
    for lam in w.points():
        defined = sum(1 for s in range(1, d + 1) if shift(w, s, lam) is not None)
        assert defined == stratum_index(w, lam)


def test_shift_examples():
    w = FineWindow(2, 2)
    assert shift(w, 1, (1, 1)) == (2, 1)
    assert shift(FineWindow(2, 1), 1, (2, 1)) is None
    w1 = FineWindow(1, 2)
    images = [shift(w1, 1, p) for p in w1.points() if shift(w1, 1, p) is not None]
    assert sorted(images) == [(2,), (3,), (4,)] and len(set(images)) == 3


def test_window_child_roundtrip():
    w = FineWindow(2, 2)
    seen = set()
    for lam in w.points():
        assert w.from_child(w.to_child(lam)) == lam
        seen.add(w.local_index(lam))
    assert seen == set(range(16))


# -- algebra helpers --------------------------------------------------------------

def test_algebra_helpers():
    assert pochhammer(Fraction(1, 2), 3) == Fraction(15, 8)
    assert pochhammer(5, 0) == 1
    assert multinomial([2, 1, 1]) == 12
    assert [double_factorial_odd(i) for i in range(4)] == [1, 1, 3, 15]
    assert [i_power(p) for p in range(5)] == [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 0)]


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(-5, 5)), max_size=5),
       st.lists(st.integers(-3, 3), min_size=4, max_size=4))
def test_polynomial_product_evaluates_multiplicatively(terms, x):
    p = Polynomial({tuple(sorted((a, b))): Fraction(c) for a, b, c in terms})
    q = p + Polynomial.constant(1)
    assert (p * q).evaluate(x) == p.evaluate(x) * q.evaluate(x)
    assert (p - p).terms == {}


def test_torus_edges_d1_small():
    assert torus_edges(0, LatticeConfig(1)) == [(0, 0)]
    assert sorted(torus_edges(1, LatticeConfig(1))) == [(0, 1), (1, 0)]
    cfg = LatticeConfig(2)
    assert all(a != b for a, b in torus_edges(2, cfg))
    # every unordered pair of grid neighbours appears exactly once at side 4
    pairs = {tuple(sorted(e)) for e in torus_edges(2, cfg)}
    assert len(pairs) == 32
