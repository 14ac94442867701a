"""R-matrix calculus and conditional expectations under the resolution process.

For ``f = f_0`` the matrix ``R(lam)`` is defined by

    f^(lam-1) (f, f', ..., f^(k)) = R(lam) ((f^lam), (f^lam)', ..., (f^lam)^(k))

and is built here from the first-order renormalizability coefficients
``c_ij``.  Row ``k`` of ``R(lam)^-1`` expresses ``(f^lam)^(k)`` in the
basis ``f^(lam-1) f^(l)``; differentiating once more and substituting
``f^(l) f' = sum_j c_lj f^(j) f`` gives the recursion

    a_{k+1} = shift(a_k) + (lam - 1) * a_k . C.

Scalars stay generic so that the same code runs on ``Fraction``, floats and
sympy expressions.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

from .algebra import as_scalar, i_power, is_exact, pochhammer
from .reference import (GammaFamily, HypothesisFailure, ReferenceFamily,
                        renormalizability_coefficients)


class NoCertificateError(ValueError):
    """The family does not satisfy the first-order renormalizability relation."""


def _is_zero(v) -> bool:
    try:
        return v == 0 or abs(v) < 1e-13 and not is_exact(v)
    except TypeError:
        return bool(v == 0)


@dataclass(frozen=True)
class RMatrix:
    """Lower-triangular ``(k+1) x (k+1)`` matrix stored row by row."""

    rows: Tuple[Tuple, ...]
    params: Tuple = ()
    experimental: bool = False

    @property
    def order(self) -> int:
        return len(self.rows) - 1

    def __getitem__(self, idx):
        a, b = idx
        if b > a:
            return self.rows[a][0] * 0
        return self.rows[a][b]

    def truncate(self, k: int) -> "RMatrix":
        if k > self.order:
            raise ValueError("cannot truncate to a larger order")
        return RMatrix(tuple(self.rows[: k + 1]), self.params, self.experimental)

    def __matmul__(self, other: "RMatrix") -> "RMatrix":
        k = min(self.order, other.order)
        rows = []
        for a in range(k + 1):
            row = []
            for b in range(a + 1):
                acc = self[a, b] * 0
                for c in range(b, a + 1):
                    acc = acc + self[a, c] * other[c, b]
                row.append(acc)
            rows.append(tuple(row))
        return RMatrix(tuple(rows), (), self.experimental or other.experimental)

    def inverse(self) -> "RMatrix":
        k = self.order
        inv = [[None] * (a + 1) for a in range(k + 1)]
        for a in range(k + 1):
            diag = self[a, a]
            if _is_zero(diag):
                raise ZeroDivisionError("singular R-matrix")
            inv[a][a] = 1 / diag
            for b in range(a - 1, -1, -1):
                acc = diag * 0
                for c in range(b, a):
                    acc = acc + self[a, c] * inv[c][b]
                inv[a][b] = -acc / diag
        return RMatrix(tuple(tuple(r) for r in inv), self.params, self.experimental)

    def map(self, fn) -> "RMatrix":
        return RMatrix(tuple(tuple(fn(v) for v in r) for r in self.rows), self.params,
                       self.experimental)

    def to_lists(self) -> List[List]:
        k = self.order
        return [[self[a, b] for b in range(k + 1)] for a in range(k + 1)]


def _coefficient_rows(family: ReferenceFamily, k: int):
    try:
        return renormalizability_coefficients(family, k, t=0)
    except HypothesisFailure as exc:
        raise NoCertificateError(str(exc)) from exc


def r_matrix_inverse(family: ReferenceFamily, lam, k: int) -> RMatrix:
    """``R^k(lam)^-1`` from the renormalizability coefficients."""
    if k < 0:
        raise ValueError("order must be >= 0")
    lam = as_scalar(lam)
    coeffs = _coefficient_rows(family, k)
    one = lam * 0 + 1
    a = [one]
    rows = [(one,)]
    for step in range(k):
        nxt = [one * 0] * (step + 2)
        for ell, val in enumerate(a):
            nxt[ell + 1] = nxt[ell + 1] + val
            for j, c in enumerate(coeffs[ell]):
                if j < len(nxt):
                    nxt[j] = nxt[j] + (lam - 1) * val * c
        a = nxt
        rows.append(tuple(a))
    return RMatrix(tuple(rows), (lam,), family.experimental)


def r_matrix(family: ReferenceFamily, lam, k: int) -> RMatrix:
    return r_matrix_inverse(family, lam, k).inverse()


def r_ratio(family: ReferenceFamily, mu, lam, k: int) -> RMatrix:
    """``R(mu, lam) = R(mu)^-1 R(lam)``."""
    out = r_matrix_inverse(family, mu, k) @ r_matrix(family, lam, k)
    return RMatrix(out.rows, (as_scalar(mu), as_scalar(lam)), out.experimental)


# -- conditional expectations of powers ------------------------------------

@dataclass(frozen=True)
class CoefficientPolynomial:
    """Univariate polynomial ``sum c_l x^l`` in the coarse value (ascending)."""

    coeffs: Tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))

    @property
    def degree(self) -> int:
        for ell in range(len(self.coeffs) - 1, -1, -1):
            if not _is_zero(self.coeffs[ell]):
                return ell
        return 0

    def __call__(self, x):
        out = 0
        for c in reversed(self.coeffs):
            out = out * x + (float(c) if is_exact(c) and not is_exact(x) else c)
        return out

    def _padded(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        z = 0
        a = list(self.coeffs) + [z] * (n - len(self.coeffs))
        b = list(other.coeffs) + [z] * (n - len(other.coeffs))
        return a, b

    def __add__(self, other):
        a, b = self._padded(other)
        return CoefficientPolynomial(tuple(x + y for x, y in zip(a, b)))

    def __sub__(self, other):
        a, b = self._padded(other)
        return CoefficientPolynomial(tuple(x - y for x, y in zip(a, b)))

    def scale(self, s) -> "CoefficientPolynomial":
        return CoefficientPolynomial(tuple(c * s for c in self.coeffs))

    def max_abs(self):
        return max((abs(c) for c in self.coeffs), default=0)

    def __eq__(self, other):
        if not isinstance(other, CoefficientPolynomial):
            return NotImplemented
        a, b = self._padded(other)
        return all(x == y for x, y in zip(a, b))

    def __hash__(self):
        return hash(self.coeffs)


def _assemble(rrow: Sequence, k: int, rn, rm, imag_tol: float = 1e-9) -> CoefficientPolynomial:
    """``sum_l (-i rn rm)^k (i / rn)^l R_kl x^l`` with the powers of i tracked exactly."""
    out = []
    for ell in range(k + 1):
        re_part, im_part = i_power(3 * k + ell)
        val = (rn * rm) ** k / rn ** ell * rrow[ell]
        if im_part:
            # the coefficient is i * val; val must vanish for a real result
            if isinstance(val, complex):
                real = -im_part * val.imag
                if abs(val.real) > imag_tol * max(1.0, abs(val)):
                    raise ArithmeticError(f"non-real coefficient at degree {ell}: {val}")
                out.append(real)
                continue
            if not _is_zero(val) and not _symbolic_zero(val):
                raise ArithmeticError(f"non-real coefficient at degree {ell}: i*{val}")
            out.append(val * 0)
        else:
            if isinstance(val, complex):
                if abs(val.imag) > imag_tol * max(1.0, abs(val)):
                    raise ArithmeticError(f"non-real coefficient at degree {ell}: {val}")
                val = val.real
            out.append(re_part * val)
    return CoefficientPolynomial(tuple(out))


def _symbolic_zero(val) -> bool:
    simplify = getattr(val, "simplify", None)
    return simplify is not None and simplify() == 0


def _level_scales(family: ReferenceFamily, n: int, m: int):
    if n < 0 or m < 0:
        raise ValueError("levels must be nonnegative")
    r = Fraction(family.r)
    return r ** n, r ** m


def cond_exp_power(family: ReferenceFamily, n: int, m: int, k: int) -> CoefficientPolynomial:
    """``E[(x_ij)^k | x^n]`` as a polynomial in the coarse value ``x_i``."""
    if k < 0:
        raise ValueError("power must be >= 0")
    rn, rm = _level_scales(family, n, m)
    ratio = r_ratio(family, 1 / (rn * rm), 1 / rn, k)
    return _assemble(ratio.rows[k], k, rn, rm)


def cond_exp_power_symbolic(family: ReferenceFamily, k: int, rn, rm) -> CoefficientPolynomial:
    """Same as :func:`cond_exp_power` with ``r**n``, ``r**m`` given as sympy symbols."""
    import sympy

    ratio = r_ratio(family, 1 / (rn * rm), 1 / rn, k)
    poly = _assemble(ratio.rows[k], k, rn, rm)
    return CoefficientPolynomial(tuple(sympy.factor(sympy.simplify(c)) for c in poly.coeffs))


def gamma_power_coefficient(family: GammaFamily, n: int, m: int, k: int):
    """Closed form ``r^{mk} (alpha_{n+m})_k / (alpha_n)_k``."""
    r = family.r
    return Fraction(r) ** (m * k) * pochhammer(family.alpha(n + m), k) / pochhammer(family.alpha(n), k)


# -- monomials on the Gamma field --------------------------------------------

@dataclass(frozen=True)
class MonomialSpec:
    """Exponents ``(k_1, ..., k_p)`` on ``p`` distinct children of one coarse site."""

    exponents: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "exponents", tuple(int(k) for k in self.exponents))
        if not self.exponents:
            raise ValueError("monomial needs at least one factor")
        if any(k < 1 for k in self.exponents):
            raise ValueError("all exponents must be >= 1")

    @property
    def total(self) -> int:
        return sum(self.exponents)

    @property
    def p(self) -> int:
        return len(self.exponents)


def gamma_cond_exp_monomial(family: GammaFamily, n: int, m: int, spec) -> Fraction:
    """Coefficient of ``x_i^k`` in ``E[prod_t x_{i j_t}^{k_t} | x^n]``."""
    if not isinstance(spec, MonomialSpec):
        spec = MonomialSpec(tuple(spec))
    if spec.p > family.r ** m:
        raise ValueError(f"{spec.p} distinct children requested but a cell has only {family.r ** m}")
    fine = family.alpha(n + m)
    num = Fraction(family.r) ** (m * spec.total) if is_exact(fine) else float(family.r) ** (m * spec.total)
    for k in spec.exponents:
        num = num * pochhammer(fine, k)
    return num / pochhammer(family.alpha(n), spec.total)


def cross_moment_yy(family: ReferenceFamily, n: int, m: int) -> CoefficientPolynomial:
    """``E[y_ij y_ij' | x^n]`` for two distinct children ``j != j'``."""
    if m < 1:
        raise ValueError("two distinct children need m >= 1")
    second = cond_exp_power(family, n, m, 2)
    x_sq = CoefficientPolynomial((0, 0, 1))
    return (x_sq - second).scale(Fraction(1, family.r ** m - 1))


def centered_second_moment(family: ReferenceFamily, n: int, m: int) -> CoefficientPolynomial:
    """``E[y_ij^2 | x^n] = E[x_ij^2 | x^n] - x_i^2``."""
    return cond_exp_power(family, n, m, 2) - CoefficientPolynomial((0, 0, 1))


def compose(outer: Sequence[CoefficientPolynomial], inner: CoefficientPolynomial) -> CoefficientPolynomial:
    """Substitute ``E[x^l | .]`` for each ``x^l`` in ``inner`` using ``outer[l]``."""
    acc = CoefficientPolynomial((inner.coeffs[0] * 0,))
    for ell, c in enumerate(inner.coeffs):
        acc = acc + outer[ell].scale(c)
    return acc


def tower_check(family: ReferenceFamily, n: int, m1: int, m2: int, k: int, tol: float = 1e-10) -> bool:
    """Compare ``n -> n+m1 -> n+m1+m2`` with the direct ``n -> n+m1+m2`` step."""
    direct = cond_exp_power(family, n, m1 + m2, k)
    inner = cond_exp_power(family, n + m1, m2, k)
    outer = [cond_exp_power(family, n, m1, ell) for ell in range(k + 1)]
    diff = compose(outer, inner) - direct
    if all(is_exact(c) for c in diff.coeffs):
        return all(c == 0 for c in diff.coeffs)
    scale = max(1.0, float(direct.max_abs()))
    return float(diff.max_abs()) <= tol * scale
