"""Generalized Wick ordering of powers.

``V^n_k`` is the degree-``k`` polynomial whose block averages form a cylinder
density: ``E[V^{n+m}_k(x_ij) | x^n] = V^n_k(x_i)``.  The closed forms below
are checked against :func:`wick_by_subtraction`, which takes the finite part
of ``E[(x_ij)^k | x^n]`` as ``r^m -> infinity``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Dict, List, Tuple

from .algebra import double_factorial_odd, pochhammer
from .condexp import CoefficientPolynomial, compose, cond_exp_power, cond_exp_power_symbolic
from .reference import GammaFamily, GaussianFamily, ReferenceFamily


@dataclass(frozen=True)
class WickPolynomial:
    kind: str
    n: int
    k: int
    coeffs: Tuple  # ascending powers

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if len(self.coeffs) != self.k + 1 or self.coeffs[-1] == 0:
            raise ValueError("Wick polynomial must have exact degree k")

    def polynomial(self) -> CoefficientPolynomial:
        return CoefficientPolynomial(self.coeffs)

    def __call__(self, x):
        return self.polynomial()(x)

    def descending(self) -> List:
        return list(reversed(self.coeffs))

    @property
    def is_monomial(self) -> bool:
        return all(c == 0 for c in self.coeffs[:-1])


def wick_gamma(n: int, k: int, alpha0, d: int = 1) -> WickPolynomial:
    """``(alpha_0)_k / (r^{kn} (alpha_n)_k) x^k``."""
    if k < 1:
        raise ValueError("degree must be >= 1")
    fam = GammaFamily(alpha0, 1, d)
    coeff = pochhammer(fam.alpha0, k) / (Fraction(fam.r) ** (k * n) * pochhammer(fam.alpha(n), k))
    zero = coeff * 0
    return WickPolynomial("gamma", n, k, (zero,) * k + (coeff,))


MAX_GAUSSIAN_DEGREE = 4


def wick_gaussian(n: int, k: int, sigma0=1, d: int = 1) -> WickPolynomial:
    """Hermite polynomial for variance ``sigma0 * r**n`` (degrees 1..4)."""
    if not 1 <= k <= MAX_GAUSSIAN_DEGREE:
        raise ValueError(f"Gaussian Wick ordering is provided for 1 <= k <= {MAX_GAUSSIAN_DEGREE}")
    fam = GaussianFamily(sigma0, d)
    var = fam.sigma(n)
    coeffs = [var * 0] * (k + 1)
    for i in range(k // 2 + 1):
        coeffs[k - 2 * i] = (-1) ** i * comb(k, 2 * i) * double_factorial_odd(i) * var ** i
    return WickPolynomial("gaussian", n, k, coeffs)


def wick_closed_form(family: ReferenceFamily, n: int, k: int) -> WickPolynomial:
    if isinstance(family, GammaFamily):
        return wick_gamma(n, k, family.alpha0, family.d)
    if isinstance(family, GaussianFamily):
        return wick_gaussian(n, k, family.sigma0, family.d)
    raise ValueError(f"no Wick ordering for the {family.kind} family")


@dataclass
class SubtractionDiagnostics:
    """Per-coefficient behaviour of ``E[x_ij^k | x^n]`` as ``u = r^m`` grows.

    ``terms[l]`` lists ``(power of u, coefficient, verdict)`` with verdict one
    of ``divergent``, ``finite`` or ``vanishing``.
    """

    terms: Dict[int, List[Tuple[int, object, str]]] = field(default_factory=dict)
    normalization: object = 1

    @property
    def dropped(self) -> Dict[int, List]:
        return {ell: [t for t in ts if t[2] == "divergent"] for ell, ts in self.terms.items()}


def _expand_at_infinity(expr, u):
    """Laurent terms of a rational function of ``u`` around ``u = infinity``.

    Returns a dict power -> coefficient down to ``u^-2``; only the ``u^0``
    part is kept by the recipe, the rest feeds the diagnostics.
    """
    import sympy

    v = sympy.Symbol("v", positive=True)
    e = sympy.cancel(sympy.together(expr.subs(u, 1 / v)))
    num, den = sympy.fraction(e)
    if not (num.is_polynomial(v) and den.is_polynomial(v)):
        raise ArithmeticError(f"coefficient {expr} is not rational in r^m")
    ser = sympy.series(e, v, 0, 3).removeO()
    out = {}
    for term in sympy.Add.make_args(sympy.expand(ser)):
        coeff, power = term.as_coeff_exponent(v)
        if coeff != 0:
            out[-int(power)] = out.get(-int(power), 0) + coeff
    return out


def _finite_part(family: ReferenceFamily, n: int, k: int):
    import sympy

    u = sympy.Symbol("u", positive=True)
    rn = sympy.Integer(family.r) ** n
    poly = cond_exp_power_symbolic(family, k, rn, u)
    diag = SubtractionDiagnostics()
    finite = []
    for ell, c in enumerate(poly.coeffs):
        expansion = _expand_at_infinity(sympy.sympify(c), u)
        rows = []
        for power, coeff in sorted(expansion.items(), reverse=True):
            verdict = "divergent" if power > 0 else "finite" if power == 0 else "vanishing"
            rows.append((power, coeff, verdict))
        diag.terms[ell] = rows
        finite.append(expansion.get(0, sympy.Integer(0)))
    return finite, diag


def _to_exact(value):
    import sympy

    value = sympy.nsimplify(value) if not value.is_Rational else value
    if value.is_Rational:
        return Fraction(int(value.p), int(value.q))
    return float(value)


def wick_by_subtraction(family: ReferenceFamily, n: int, k: int):
    """Finite part of ``lim_m E[(x_ij)^k | x^n]`` with divergent terms dropped.

    The result is normalized so that the level-0 polynomial has leading
    coefficient 1 (which makes ``V^0_k = x^k`` for the Gamma field).
    """
    if k < 1:
        raise ValueError("degree must be >= 1")
    finite, diag = _finite_part(family, n, k)
    base, _ = _finite_part(family, 0, k) if n else (finite, diag)
    norm = 1 / base[k]
    diag.normalization = norm
    coeffs = tuple(_to_exact(c * norm) for c in finite)
    return WickPolynomial(family.kind, n, k, coeffs), diag


def martingale_residual(family: ReferenceFamily, n: int, m: int, k: int,
                        wick=wick_closed_form) -> CoefficientPolynomial:
    """``E[V^{n+m}_k(x_ij) | x^n] - V^n_k(x_i)`` coefficientwise.

    Averaging over the ``r^{n+m}`` fine sites of the cylinder density reduces
    to this per-site identity because every child of a coarse cell has the
    same conditional law.
    """
    fine = wick(family, n + m, k).polynomial()
    coarse = wick(family, n, k).polynomial()
    powers = [cond_exp_power(family, n, m, ell) for ell in range(k + 1)]
    return compose(powers, fine) - coarse


def martingale_check(family: ReferenceFamily, n: int, m: int, k: int):
    """Largest absolute coefficient of :func:`martingale_residual`."""
    return martingale_residual(family, n, m, k).max_abs()
