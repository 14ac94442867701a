"""Lattice kinetic energy, its conditional expectation and renormalization.

Nearest-neighbour pairs are the ``d * r**n`` torus edges of
:func:`levyren.lattice.torus_edges`; each unordered edge enters ``T_app``
once with weight ``1/2``:

    T_app^n(x) = r^-n * sum_{edges ab} (1/2) ((x_a - x_b) / eps^n)^2.

As a quadratic form this has diagonal ``d * eps^-2n`` and weight
``-eps^-2n`` on every edge, so rows of the symmetric matrix sum to zero.
The ``ordered`` convention (every edge seen from both endpoints) is twice
this and is available for comparison.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Sequence, Tuple

from .algebra import Polynomial, is_exact
from .condexp import (CoefficientPolynomial, centered_second_moment, cond_exp_power,
                      cross_moment_yy)
from .lattice import EPS, LatticeConfig, degree_count_formula, degree_histogram, FineWindow, torus_edges
from .reference import GammaFamily, GaussianFamily, ReferenceFamily


def _r(d: int) -> int:
    return 2 ** d


@dataclass
class QuadraticForm:
    """``L(x) = r^-n * (sum_i diag_i x_i^2 + sum_{edges ab} w_ab x_a x_b)``.

    Edges are unordered pairs of flat site indices at level ``n``; parallel
    edges on small tori accumulate into one weight, and a self-edge (side-1
    torus) folds into the loop coefficient in :meth:`edge_weights`.
    """

    n: int
    d: int
    diagonal: Dict[int, object] = field(default_factory=dict)
    edges: Dict[Tuple[int, int], object] = field(default_factory=dict)

    def add_edge(self, a: int, b: int, w) -> None:
        key = (min(a, b), max(a, b))
        self.edges[key] = self.edges.get(key, 0) + w

    @property
    def prefactor(self) -> Fraction:
        return Fraction(1, _r(self.d) ** self.n)

    def edge_weights(self) -> Dict[Tuple[int, int], object]:
        """The map ``c^n`` on unordered pairs, loops included."""
        out: Dict[Tuple[int, int], object] = {}
        for i, c in self.diagonal.items():
            out[(i, i)] = out.get((i, i), 0) + c
        for key, c in self.edges.items():
            out[key] = out.get(key, 0) + c
        return {k: v for k, v in out.items() if v != 0}

    def coefficient(self, i: int, j: int):
        return self.edge_weights().get((min(i, j), max(i, j)), 0)

    def matrix(self):
        """Symmetric matrix ``M`` with ``L(x) = r^-n x^T M x``."""
        size = _r(self.d) ** self.n
        zero = next(iter(self.diagonal.values()), 0) * 0
        mat = [[zero] * size for _ in range(size)]
        for i, c in self.diagonal.items():
            mat[i][i] += c
        for (a, b), c in self.edges.items():
            if a == b:
                mat[a][a] += c
            else:
                mat[a][b] += c / 2
                mat[b][a] += c / 2
        return mat

    def polynomial(self) -> Polynomial:
        terms = {}
        for (a, b), c in self.edge_weights().items():
            terms[(a, b)] = c * self.prefactor
        return Polynomial(terms)

    def evaluate(self, x: Sequence):
        return self.polynomial().evaluate(x)


def t_app_form(n: int, d: int) -> QuadraticForm:
    scale = EPS ** (-2 * n)
    q = QuadraticForm(n, d)
    for i in range(_r(d) ** n):
        q.diagonal[i] = d * scale
    for a, b in torus_edges(n, LatticeConfig(d)):
        q.add_edge(a, b, -scale)
    return q


def t_app(n: int, x: Sequence, d: int = 1, convention: str = "edges"):
    """Lattice kinetic energy of the level-``n`` field ``x`` (flat order)."""
    if len(x) != _r(d) ** n:
        raise ValueError(f"field has {len(x)} values, level {n} needs {_r(d) ** n}")
    if convention not in ("edges", "ordered"):
        raise ValueError(f"unknown convention {convention!r}")
    scale = EPS ** (-2 * n)
    total = 0
    for a, b in torus_edges(n, LatticeConfig(d)):
        diff = x[a] - x[b]
        total = total + diff * diff
    total = total * scale / 2 / _r(d) ** n
    return 2 * total if convention == "ordered" else total


# -- conditional expectation --------------------------------------------------

@dataclass(frozen=True)
class ShiftCorrection:
    n: int
    m: int
    poly: CoefficientPolynomial  # per-site polynomial in x_i


def shift_polynomial(family: ReferenceFamily, n: int, m: int) -> CoefficientPolynomial:
    """``eps^-m E[y_ij^2 | x^n] - (eps^-m - 1) E[y_ij y_ij' | x^n]``."""
    if m == 0:
        return CoefficientPolynomial((0, 0, 0))
    s = EPS ** (-m)
    return centered_second_moment(family, n, m).scale(s) - cross_moment_yy(family, n, m).scale(s - 1)


def shift_polynomial_closed(family: ReferenceFamily, n: int, m: int) -> CoefficientPolynomial:
    """``(eps^-m r^m - 1) / (r^m - 1) * (E[x_ij^2 | x^n] - x_i^2)``."""
    if m == 0:
        return CoefficientPolynomial((0, 0, 0))
    rm = family.r ** m
    factor = (EPS ** (-m) * rm - 1) / (rm - 1)
    return centered_second_moment(family, n, m).scale(factor)


def _site_poly(site: int, poly: CoefficientPolynomial) -> Polynomial:
    return Polynomial({(site,) * ell: c for ell, c in enumerate(poly.coeffs) if c != 0})


@dataclass(frozen=True)
class KineticIdentity:
    """``E[T_app^{n+m} | x^n] = multiplier * (eps^n T_app^n + d eps^-n T_shift)``."""

    family: ReferenceFamily
    n: int
    m: int
    multiplier: Fraction
    shift: ShiftCorrection

    def predicted(self) -> Polynomial:
        d, n = self.family.d, self.n
        t_shift = Polynomial()
        for i in range(_r(d) ** n):
            t_shift = t_shift + _site_poly(i, self.shift.poly)
        t_shift = t_shift * Fraction(1, _r(d) ** n)
        inner = t_app_form(n, d).polynomial() * EPS ** n + t_shift * (d * EPS ** (-n))
        return inner * self.multiplier

    def brute_force(self) -> Polynomial:
        return cond_exp_t_app_brute(self.family, self.n, self.m)

    def residual(self) -> Polynomial:
        return self.brute_force() - self.predicted()

    def holds(self, tol: float = 1e-9) -> bool:
        res = self.residual()
        if all(is_exact(c) for c in res.terms.values()):
            return res.terms == {}
        return float(res.max_abs_coefficient()) <= tol


def cond_exp_t_app(family: ReferenceFamily, n: int, m: int) -> KineticIdentity:
    return KineticIdentity(family, n, m, EPS ** (-n - m),
                           ShiftCorrection(n, m, shift_polynomial(family, n, m)))


def cond_exp_t_app_brute(family: ReferenceFamily, n: int, m: int) -> Polynomial:
    """``E[T_app^{n+m} | x^n]`` by summing over every fine edge."""
    d = family.d
    N = n + m
    block = _r(d) ** m
    second = _site_poly_factory(cond_exp_power(family, n, m, 2))
    cross = _site_poly_factory(cross_moment_yy(family, n, m)) if m else None
    scale = EPS ** (-2 * N) / 2 / _r(d) ** N
    acc = Polynomial()
    for a, b in torus_edges(N, LatticeConfig(d)):
        if a == b:
            continue
        A, B = a // block, b // block
        if A == B:
            mixed = Polynomial.monomial((A, A)) + cross(A)
        else:
            mixed = Polynomial.monomial((A, B))
        acc = acc + (second(A) + second(B) - mixed * 2) * scale
    return acc


def _site_poly_factory(poly: CoefficientPolynomial):
    cache: Dict[int, Polynomial] = {}

    def get(site: int) -> Polynomial:
        if site not in cache:
            cache[site] = _site_poly(site, poly)
        return cache[site]

    return get


# -- renormalized kinetic energy ----------------------------------------------

def gamma_counterterm_coefficient(n: int, alpha0, d: int = 1):
    """``d eps^-n / (alpha_n + 1)``, the mass counterterm of the Gamma field."""
    fam = GammaFamily(alpha0, 1, d)
    return d * EPS ** (-n) / (fam.alpha(n) + 1)


def t_ren_gamma(n: int, x: Sequence, alpha0, d: int = 1):
    """``eps^n T_app^n - d eps^-n / (alpha_n + 1) * r^-n sum x_i^2``."""
    sq = 0
    for v in x:
        sq = sq + v * v
    return EPS ** n * t_app(n, x, d) - gamma_counterterm_coefficient(n, alpha0, d) * sq / _r(d) ** n


def t_ren_gaussian(n: int, x: Sequence, sigma0=1, d: int = 1):
    """``eps^n T_app^n - d sigma0 eps^-n r^n``."""
    fam = GaussianFamily(sigma0, d)
    return EPS ** n * t_app(n, x, d) - d * fam.sigma0 * EPS ** (-n) * _r(d) ** n


def t_ren_form(family: ReferenceFamily, n: int) -> Polynomial:
    d = family.d
    base = t_app_form(n, d).polynomial() * EPS ** n
    if isinstance(family, GammaFamily):
        coef = gamma_counterterm_coefficient(n, family.alpha0, d) / _r(d) ** n
        return base - Polynomial({(i, i): coef for i in range(_r(d) ** n)})
    if isinstance(family, GaussianFamily):
        return base - d * family.sigma0 * EPS ** (-n) * _r(d) ** n
    raise ValueError(f"no renormalized kinetic energy for the {family.kind} family")


def t_ren_martingale_residual(family: ReferenceFamily, n: int, m: int) -> Polynomial:
    """``E[T_ren^{n+m} | x^n] - T_ren^n`` with the level-``n+m`` counterterm."""
    d = family.d
    N = n + m
    ident = cond_exp_t_app(family, n, m)
    lifted = ident.brute_force() * EPS ** N
    block = _r(d) ** m
    if isinstance(family, GammaFamily):
        coef = gamma_counterterm_coefficient(N, family.alpha0, d) / _r(d) ** N
        second = cond_exp_power(family, n, m, 2)
        for i in range(_r(d) ** n):
            lifted = lifted - _site_poly(i, second) * (coef * block)
    else:
        lifted = lifted - d * family.sigma0 * EPS ** (-N) * _r(d) ** N
    return lifted - t_ren_form(family, n)


def kinetic_adjacency_gamma(n: int, alpha0, d: int = 1) -> QuadraticForm:
    """Renormalized kinetic form: loops ``d alpha_n eps^-n / (1 + alpha_n)``, edges ``-eps^-n``."""
    fam = GammaFamily(alpha0, 1, d)
    a = fam.alpha(n)
    q = QuadraticForm(n, d)
    for i in range(_r(d) ** n):
        q.diagonal[i] = d * a * EPS ** (-n) / (1 + a)
    for s, t in torus_edges(n, LatticeConfig(d)):
        q.add_edge(s, t, -EPS ** (-n))
    return q


# -- bookkeeping used by the conditional-expectation identity -----------------

def internal_degree_sum(d: int, m: int) -> int:
    """Sum over a fine window of within-region degrees, by enumeration."""
    return sum(k * c for k, c in degree_histogram(FineWindow(d, m)).items())


def internal_degree_sum_formula(d: int, m: int) -> int:
    """``sum_k (d+k) C(d,k) 2^(d-k) (s-2)^k = 2d s^d - 2d s^(d-1)`` with ``s = 2^m``."""
    s = 2 ** m
    direct = sum((d + k) * degree_count_formula(d, m, k) for k in range(d + 1))
    closed = 2 * d * s ** d - 2 * d * s ** (d - 1)
    if direct != closed:
        raise ArithmeticError("degree bookkeeping mismatch")
    return closed
