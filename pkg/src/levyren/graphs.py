"""Multigraph cumulant calculus for quadratic Lagrangians on the Gamma field.

A graph is a multiset of unordered edges between flat site indices at one
resolution level.  ``chi(g)`` is ``E[x(g) | x^n]`` and ``chi_c(g)`` is the
joint cumulant of the edge monomials of ``g``: edges are treated as labelled
factors, so a partition of a multiset is weighted by the number of labelled
set partitions that produce it.  With that weighting the moment/cumulant
relations and the anchored recursion hold exactly.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement, product
from math import comb, factorial
from typing import Dict, Iterator, List, Sequence, Tuple

from .algebra import Polynomial, multinomial
from .condexp import gamma_cond_exp_monomial
from .reference import GammaFamily

Edge = Tuple[int, int]
MAX_EDGES = 8
MAX_MULTISETS = 250_000


def edge(a: int, b: int) -> Edge:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class MultiGraph:
    """Sorted tuple of edges at resolution ``level`` in dimension ``d``."""

    edges: Tuple[Edge, ...]
    level: int
    d: int = 1

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(sorted(edge(*e) for e in self.edges)))
        size = (2 ** self.d) ** self.level
        for a, b in self.edges:
            if not (0 <= a < size and 0 <= b < size):
                raise ValueError(f"edge {(a, b)} outside level {self.level}")

    @property
    def size(self) -> int:
        return len(self.edges)

    def __len__(self) -> int:
        return len(self.edges)

    def __mul__(self, other: "MultiGraph") -> "MultiGraph":
        if (self.level, self.d) != (other.level, other.d):
            raise ValueError("graphs live at different resolutions")
        return MultiGraph(self.edges + other.edges, self.level, self.d)

    def counts(self) -> Counter:
        return Counter(self.edges)

    def divide(self, h: "MultiGraph") -> "MultiGraph":
        rest = self.counts()
        rest.subtract(h.counts())
        if any(v < 0 for v in rest.values()):
            raise ValueError("h is not a factor of g")
        return MultiGraph(tuple(rest.elements()), self.level, self.d)

    def vertices(self) -> List[int]:
        return sorted({v for e in self.edges for v in e})

    def degrees(self) -> Counter:
        deg: Counter = Counter()
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def coarse(self, n: int) -> "MultiGraph":
        """Edgewise ancestor map to level ``n``."""
        if n > self.level:
            raise ValueError("coarse level must not exceed the graph level")
        block = (2 ** self.d) ** (self.level - n)
        return MultiGraph(tuple((a // block, b // block) for a, b in self.edges), n, self.d)

    def to_json(self) -> List[List[int]]:
        return [list(e) for e in self.edges]


def coarse(g: MultiGraph, n: int) -> MultiGraph:
    return g.coarse(n)


def _connected(edges: Sequence[Edge]) -> bool:
    parent: Dict[int, int] = {}

    def find(v):
        while parent.setdefault(v, v) != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    return len({find(v) for v in parent}) <= 1


def is_coarsely_connected(g: MultiGraph, n: int) -> bool:
    return _connected(g.coarse(n).edges)


# -- partitions ----------------------------------------------------------------

def _set_partitions(k: int) -> Iterator[List[List[int]]]:
    """Set partitions of ``range(k)``; block order follows first elements."""
    if k == 0:
        yield []
        return
    for part in _set_partitions(k - 1):
        for i in range(len(part)):
            yield part[:i] + [part[i] + [k - 1]] + part[i + 1:]
        yield part + [[k - 1]]


Partition = Tuple[Tuple[Edge, ...], ...]


@lru_cache(maxsize=None)
def _partition_counts(edges: Tuple[Edge, ...]) -> Tuple[Tuple[Partition, int], ...]:
    counts: Counter = Counter()
    for part in _set_partitions(len(edges)):
        blocks = tuple(sorted(tuple(sorted(edges[i] for i in block)) for block in part))
        counts[blocks] += 1
    return tuple(sorted(counts.items()))


def _check_cap(g: MultiGraph) -> None:
    if g.size > MAX_EDGES:
        raise ValueError(f"graph has {g.size} edges; the enumeration cap is {MAX_EDGES}")


def multiset_partitions(g: MultiGraph) -> List[Tuple[MultiGraph, ...]]:
    """Every partition of the edge multiset exactly once, in canonical order."""
    _check_cap(g)
    return [tuple(MultiGraph(b, g.level, g.d) for b in blocks)
            for blocks, _ in _partition_counts(g.edges)]


def partition_multiplicities(g: MultiGraph) -> List[Tuple[Tuple[MultiGraph, ...], int]]:
    """Distinct partitions paired with the number of labelled set partitions behind each."""
    _check_cap(g)
    return [(tuple(MultiGraph(b, g.level, g.d) for b in blocks), mult)
            for blocks, mult in _partition_counts(g.edges)]


def partition_multiplicity_formula(g: MultiGraph, blocks: Sequence[MultiGraph]) -> int:
    """``prod_e c_e! / (prod_blocks prod_e b_e! * prod (identical block counts)!)``."""
    num = 1
    for c in g.counts().values():
        num *= factorial(c)
    den = 1
    for b in blocks:
        for c in b.counts().values():
            den *= factorial(c)
    for c in Counter(b.edges for b in blocks).values():
        den *= factorial(c)
    return num // den


def sub_multisets(g: MultiGraph) -> Iterator[MultiGraph]:
    """All nonempty sub-multisets ``h <= g``."""
    items = sorted(g.counts().items())
    for choice in product(*(range(c + 1) for _, c in items)):
        if any(choice):
            yield MultiGraph(tuple(e for (e, _), t in zip(items, choice) for _ in range(t)),
                             g.level, g.d)


# -- chi values ----------------------------------------------------------------

@dataclass(frozen=True)
class ChiValue:
    """``coeff * prod_i x_i^{K_i}`` over coarse sites."""

    exponents: Tuple[Tuple[int, int], ...]
    coeff: object

    def __mul__(self, other: "ChiValue") -> "ChiValue":
        exps: Counter = Counter(dict(self.exponents))
        exps.update(dict(other.exponents))
        return ChiValue(tuple(sorted(exps.items())), self.coeff * other.coeff)

    def __add__(self, other: "ChiValue") -> "ChiValue":
        if self.coeff == 0:
            return other
        if other.coeff == 0:
            return self
        if self.exponents != other.exponents:
            raise ValueError("adding chi values with different degree profiles")
        return ChiValue(self.exponents, self.coeff + other.coeff)

    def scale(self, s) -> "ChiValue":
        return ChiValue(self.exponents, self.coeff * s)

    def __neg__(self) -> "ChiValue":
        return self.scale(-1)

    def __sub__(self, other: "ChiValue") -> "ChiValue":
        return self + (-other)

    def to_polynomial(self) -> Polynomial:
        mono = tuple(s for s, k in self.exponents for _ in range(k))
        return Polynomial({mono: self.coeff})


def coarse_profile(g: MultiGraph, n: int) -> Tuple[Tuple[int, int], ...]:
    return tuple(sorted(g.coarse(n).degrees().items()))


class ChiCalculator:
    """Memoized ``chi`` / ``chi_c`` for a Gamma family at coarse level ``n``."""

    def __init__(self, family: GammaFamily, n: int):
        if not isinstance(family, GammaFamily):
            raise TypeError("chi is implemented for the Gamma family only")
        self.family = family
        self.n = n
        self._chi: Dict[Tuple, ChiValue] = {}
        self._chi_c: Dict[Tuple, ChiValue] = {}

    def _key(self, g: MultiGraph):
        return (g.edges, g.level)

    def chi(self, g: MultiGraph) -> ChiValue:
        key = self._key(g)
        if key not in self._chi:
            self._chi[key] = self._compute_chi(g)
        return self._chi[key]

    def _compute_chi(self, g: MultiGraph) -> ChiValue:
        if g.d != self.family.d:
            raise ValueError("graph dimension differs from the family's")
        m = g.level - self.n
        if m < 0:
            raise ValueError("graph is coarser than the conditioning level")
        block = self.family.r ** m
        by_cell: Dict[int, List[int]] = {}
        for v, deg in sorted(g.degrees().items()):
            by_cell.setdefault(v // block, []).append(deg)
        coeff = Fraction(1)
        for degs in by_cell.values():
            coeff *= gamma_cond_exp_monomial(self.family, self.n, m, degs)
        return ChiValue(coarse_profile(g, self.n), coeff)

    def chi_connected_moebius(self, g: MultiGraph) -> ChiValue:
        _check_cap(g)
        total = ChiValue(coarse_profile(g, self.n), Fraction(0))
        for blocks, mult in partition_multiplicities(g):
            p = len(blocks)
            term = self.chi(blocks[0])
            for b in blocks[1:]:
                term = term * self.chi(b)
            total = total + term.scale(mult * (-1) ** (p - 1) * factorial(p - 1))
        return total

    def chi_connected_recursive(self, g: MultiGraph) -> ChiValue:
        _check_cap(g)
        key = self._key(g)
        if key in self._chi_c:
            return self._chi_c[key]
        anchor = g.edges[0]
        counts = g.counts()
        total = self.chi(g)
        for h in sub_multisets(g):
            hc = h.counts()
            if hc.get(anchor, 0) == 0 or h.size == g.size:
                continue
            w = comb(counts[anchor] - 1, hc[anchor] - 1)
            for e, c in hc.items():
                if e != anchor:
                    w *= comb(counts[e], c)
            total = total - (self.chi_connected_recursive(h) * self.chi(g.divide(h))).scale(w)
        self._chi_c[key] = total
        return total

    def chi_connected(self, g: MultiGraph, check: bool = True) -> ChiValue:
        rec = self.chi_connected_recursive(g)
        if check:
            mob = self.chi_connected_moebius(g)
            if rec.coeff != mob.coeff or (rec.coeff != 0 and rec.exponents != mob.exponents):
                raise ArithmeticError(f"recursion {rec.coeff} and Moebius {mob.coeff} disagree on {g.edges}")
        return rec

    def moment_from_cumulants(self, g: MultiGraph) -> ChiValue:
        total = ChiValue(coarse_profile(g, self.n), Fraction(0))
        for blocks, mult in partition_multiplicities(g):
            term = self.chi_connected(blocks[0], check=False)
            for b in blocks[1:]:
                term = term * self.chi_connected(b, check=False)
            total = total + term.scale(mult)
        return total


def chi(g: MultiGraph, family: GammaFamily, n: int) -> ChiValue:
    return ChiCalculator(family, n).chi(g)


def chi_connected(g: MultiGraph, family: GammaFamily, n: int) -> ChiValue:
    return ChiCalculator(family, n).chi_connected(g)


def moment_cumulant_roundtrip(g: MultiGraph, family: GammaFamily, n: int) -> bool:
    calc = ChiCalculator(family, n)
    back = calc.moment_from_cumulants(g)
    direct = calc.chi(g)
    return back.coeff == direct.coeff


# -- Lagrangian cumulants ------------------------------------------------------

def _words(form, k: int):
    weights = form.edge_weights()
    edges = sorted(weights)
    total = comb(len(edges) + k - 1, k)
    if total > MAX_MULTISETS:
        raise ValueError(f"{total} edge multisets exceed the desk-scale cap {MAX_MULTISETS}")
    for combo in combinations_with_replacement(edges, k):
        c = Fraction(1) if all(isinstance(weights[e], (int, Fraction)) for e in combo) else 1.0
        for e in combo:
            c = c * weights[e]
        yield combo, c, multinomial(Counter(combo).values())


def lagrangian_cumulant(form, k: int, n: int, family: GammaFamily) -> Polynomial:
    """``L_eff,k^{n,m}(x^n)`` for the quadratic form ``form`` at level ``n+m``.

    Sum over coarsely connected edge multisets of size ``k``, each weighted by
    the number of ordered words it represents.
    """
    if k < 1:
        raise ValueError("cumulant order must be >= 1")
    calc = ChiCalculator(family, n)
    N = form.n
    acc = Polynomial()
    for combo, c, words in _words(form, k):
        g = MultiGraph(combo, N, form.d)
        if not is_coarsely_connected(g, n):
            continue
        val = calc.chi_connected(g, check=False)
        if val.coeff != 0:
            acc = acc + val.to_polynomial() * (c * words)
    return acc * Fraction(1, (2 ** form.d) ** (k * N))


def lagrangian_moment(form, k: int, n: int, family: GammaFamily) -> Polynomial:
    """``E[L^k | x^n]`` by direct summation of ``chi`` over edge multisets."""
    calc = ChiCalculator(family, n)
    N = form.n
    acc = Polynomial()
    for combo, c, words in _words(form, k):
        val = calc.chi(MultiGraph(combo, N, form.d))
        acc = acc + val.to_polynomial() * (c * words)
    return acc * Fraction(1, (2 ** form.d) ** (k * N))


def moments_from_lagrangian_cumulants(cumulants: Dict[int, Polynomial], k: int) -> Polynomial:
    """``E[L^k] = sum over set partitions of {1..k} of prod L_eff,|B|``."""
    acc = Polynomial()
    for part in _set_partitions(k):
        term = Polynomial.constant(1)
        for block in part:
            term = term * cumulants[len(block)]
        acc = acc + term
    return acc
