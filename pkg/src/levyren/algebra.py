"""Small exact-arithmetic helpers shared by the calculus modules.

Scalars are kept generic: anything supporting ``+ - * /`` works (``Fraction``,
``float``, ``complex`` or sympy expressions).  Rational inputs stay rational.
"""
from __future__ import annotations

from fractions import Fraction
from math import comb, factorial
from numbers import Rational
from typing import Dict, Iterable, Mapping, Tuple

Monomial = Tuple[int, ...]


def as_scalar(value):
    """Coerce user input to an exact rational when possible.

    Integers, ``Fraction`` and strings like ``"3/2"`` become ``Fraction``;
    floats are left alone so that the caller opts into floating point.
    """
    if isinstance(value, bool):
        raise TypeError("boolean is not a scalar")
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    return value


def is_exact(value) -> bool:
    return isinstance(value, Rational)


def pochhammer(x, n: int):
    """Rising factorial ``x (x+1) ... (x+n-1)``; equals 1 for ``n == 0``."""
    if n < 0:
        raise ValueError("negative Pochhammer order")
    out = x * 0 + 1
    for j in range(n):
        out = out * (x + j)
    return out


def multinomial(parts: Iterable[int]) -> int:
    parts = list(parts)
    out = factorial(sum(parts))
    for p in parts:
        out //= factorial(p)
    return out


def double_factorial_odd(i: int) -> int:
    """(2i-1)!!, the number of perfect matchings of 2i points."""
    out = 1
    for j in range(1, 2 * i, 2):
        out *= j
    return out


def i_power(p: int) -> Tuple[int, int]:
    """Real and imaginary parts of ``1j ** p`` as integers."""
    return ((1, 0), (0, 1), (-1, 0), (0, -1))[p % 4]


class Polynomial:
    """Sparse multivariate polynomial over lattice sites.

    A monomial is the sorted tuple of site indices with repetition, so
    ``(0, 0, 3)`` is ``x_0^2 x_3`` and ``()`` is the constant term.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        self.terms: Dict[Monomial, object] = {}
        if terms:
            for mono, c in terms.items():
                self._add_term(tuple(sorted(mono)), c)

    @classmethod
    def constant(cls, c) -> "Polynomial":
        return cls({(): c})

    @classmethod
    def monomial(cls, sites: Iterable[int], c=1) -> "Polynomial":
        return cls({tuple(sorted(sites)): c})

    def _add_term(self, mono: Monomial, c) -> None:
        new = self.terms.get(mono, 0) + c
        if new == 0:
            self.terms.pop(mono, None)
        else:
            self.terms[mono] = new

    def copy(self) -> "Polynomial":
        p = Polynomial()
        p.terms = dict(self.terms)
        return p

    def __add__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        out = self.copy()
        for mono, c in other.terms.items():
            out._add_term(mono, c)
        return out

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        return self + (-other)

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return Polynomial({m: c * other for m, c in self.terms.items()})
        out = Polynomial()
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                out._add_term(tuple(sorted(m1 + m2)), c1 * c2)
        return out

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        return (self - other).terms == {}

    def max_abs_coefficient(self):
        return max((abs(c) for c in self.terms.values()), default=0)

    def evaluate(self, values) -> object:
        """Evaluate at ``values[site]``; works with numpy arrays of samples."""
        total = 0
        for mono, c in self.terms.items():
            term = c
            for s in mono:
                term = term * values[s]
            total = total + term
        return total

    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    def __repr__(self) -> str:
        if not self.terms:
            return "Polynomial(0)"
        parts = []
        for mono, c in sorted(self.terms.items()):
            name = "*".join(f"x{s}" for s in mono) or "1"
            parts.append(f"{c}*{name}")
        return "Polynomial(" + " + ".join(parts) + ")"


def binomial(n, k: int):
    """Generalized binomial coefficient, ``n`` may be any scalar."""
    if isinstance(n, int) and n >= 0:
        return comb(n, k)
    out = Fraction(1) if is_exact(n) else 1.0
    for j in range(k):
        out = out * (n - j) / (j + 1)
    return out
