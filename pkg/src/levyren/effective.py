"""Effective-Lagrangian series on the Gamma field.

Two settings are covered.  For a mass perturbation the effective Lagrangian
is a per-site density whose order-``k`` coefficient is a sum over bouquets of
fine loops under one coarse site.  For the renormalized kinetic energy the
contributions are grouped by diagram class around a source site of the fine
window, and each class is compared with its power-counting exponent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate
from sympy.functions.combinatorial.numbers import bell, partition, stirling
from sympy.utilities.iterables import multiset_partitions as sympy_set_partitions

from .algebra import binomial, multinomial, pochhammer
from .condexp import gamma_cond_exp_monomial
from .graphs import ChiCalculator, MultiGraph, sub_multisets
from .kinetic import QuadraticForm
from .lattice import EPS, FineWindow, stratum, stratum_size
from .reference import GammaFamily

MAX_K = 6
MAX_M = 6


def _check_caps(k: int, m: int) -> None:
    if not 1 <= k <= MAX_K:
        raise ValueError(f"order k={k} outside 1..{MAX_K}")
    if not 0 <= m <= MAX_M:
        raise ValueError(f"refinement m={m} outside 0..{MAX_M}")


# -- partition combinatorics ---------------------------------------------------

@dataclass(frozen=True)
class PartitionCombinatorics:
    k: int
    stirling: Tuple[int, ...]  # {k brace l} for l = 0..k
    stirling_sum: int
    integer_partitions: int
    fubini: int

    @property
    def hardy_ramanujan(self) -> float:
        k = self.k
        return math.exp(math.pi * math.sqrt(2 * k / 3)) / (4 * k * math.sqrt(3))

    @property
    def fubini_asymptotic(self) -> float:
        return math.factorial(self.k) / (2 * math.log(2) ** (self.k + 1))

    @property
    def discrepancy(self) -> int:
        """Stirling sum minus integer-partition count; zero only for k <= 2."""
        return self.stirling_sum - self.integer_partitions


def partition_numbers(k: int) -> PartitionCombinatorics:
    if not 1 <= k <= 30:
        raise ValueError("k must lie in 1..30")
    s = tuple(int(stirling(k, ell)) for ell in range(k + 1))
    return PartitionCombinatorics(
        k=k, stirling=s, stirling_sum=int(bell(k)), integer_partitions=int(partition(k)),
        fubini=sum(math.factorial(ell) * s[ell] for ell in range(k + 1)))


def compositions(k: int, parts: int):
    """Ordered tuples of ``parts`` positive integers summing to ``k``."""
    if parts == 1:
        yield (k,)
        return
    for first in range(1, k - parts + 2):
        for rest in compositions(k - first, parts - 1):
            yield (first,) + rest


def i_limit(k: int, ell: int) -> Fraction:
    """``lim_m I_{m,l}``: the binomial ratio tends to ``1/l!``."""
    return Fraction(sum(multinomial(c) for c in compositions(k, ell)), math.factorial(ell))


def i_term(k: int, ell: int, rm: int) -> Fraction:
    """``I_{m,l} = C(r^m, l) / r^{ml} * sum_compositions multinomial``."""
    return Fraction(binomial(rm, ell), rm ** ell) * sum(multinomial(c) for c in compositions(k, ell))


# -- mass perturbation --------------------------------------------------------

def mass_coefficient(n: int, alpha0, d: int = 1) -> Fraction:
    """``(alpha_0 + 1) / (alpha_0 + r^n)``, the Wick coefficient of ``x^2``."""
    fam = GammaFamily(alpha0, 1, d)
    return (fam.alpha0 + 1) / (fam.alpha0 + fam.r ** n)


def mass_lren(n: int, alpha0, d: int = 1) -> QuadraticForm:
    c = mass_coefficient(n, alpha0, d)
    return QuadraticForm(n, d, {i: c for i in range((2 ** d) ** n)}, {})


@lru_cache(maxsize=None)
def _loop_cumulant(n: int, m: int, alpha0: Fraction, d: int, exps: Tuple[int, ...]) -> Fraction:
    """Joint cumulant coefficient of ``k`` loops, ``exps[t]`` of them on fine vertex ``t``.

    Möbius sum over set partitions of the labelled loops; a block with
    ``b_t`` loops on vertex ``t`` has moment coefficient given by the
    monomial theorem with exponents ``2 b_t``.
    """
    fam = GammaFamily(alpha0, 1, d)
    labels = [t for t, c in enumerate(exps) for _ in range(c)]
    total = Fraction(0)
    for part in sympy_set_partitions(list(range(len(labels)))):
        p = len(part)
        term = Fraction((-1) ** (p - 1) * math.factorial(p - 1))
        for block in part:
            per_vertex: Dict[int, int] = {}
            for pos in block:
                per_vertex[labels[pos]] = per_vertex.get(labels[pos], 0) + 2
            term *= gamma_cond_exp_monomial(fam, n, m, sorted(per_vertex.values()))
        total += term
    return total


@lru_cache(maxsize=None)
def _loop_moment(n: int, m: int, alpha0: Fraction, d: int, exps: Tuple[int, ...]) -> Fraction:
    fam = GammaFamily(alpha0, 1, d)
    return gamma_cond_exp_monomial(fam, n, m, [2 * e for e in exps])


@dataclass(frozen=True)
class BouquetTerm:
    ell: int
    i_value: Fraction
    weighted_ii: Fraction  # sum_compositions multinomial * II / sum_compositions multinomial


def _bouquet(n: int, m: int, k: int, alpha0, d: int, kernel) -> Tuple[Fraction, List[BouquetTerm]]:
    _check_caps(k, m)
    fam = GammaFamily(alpha0, 1, d)
    rm = fam.r ** m
    c = mass_coefficient(n + m, fam.alpha0, d)
    total = Fraction(0)
    terms = []
    for ell in range(1, min(k, rm) + 1):
        weight = Fraction(binomial(rm, ell), rm ** ell)
        acc = Fraction(0)
        count = 0
        for comp in compositions(k, ell):
            mult = multinomial(comp)
            ii = c ** k / Fraction(rm) ** (k - ell) * kernel(n, m, fam.alpha0, d, tuple(sorted(comp)))
            acc += mult * ii
            count += mult
        total += weight * acc
        terms.append(BouquetTerm(ell, weight * count, acc / count))
    return total, terms


def bouquet_sum(n: int, m: int, k: int, alpha0, d: int = 1) -> Fraction:
    """Per-site ``L~_eff,k^{n,m}``: loops of one coarse cell grouped by support size."""
    return _bouquet(n, m, k, alpha0, d, _loop_cumulant)[0]


def bouquet_terms(n: int, m: int, k: int, alpha0, d: int = 1) -> List[BouquetTerm]:
    return _bouquet(n, m, k, alpha0, d, _loop_cumulant)[1]


def bouquet_moment_sum(n: int, m: int, k: int, alpha0, d: int = 1) -> Fraction:
    """Same grouping with moments instead of cumulants: ``b_eff`` at finite ``m``."""
    return _bouquet(n, m, k, alpha0, d, _loop_moment)[0]


def lagrangian_cumulant_coefficient(n: int, m: int, k: int, alpha0, d: int = 1) -> Fraction:
    """Coefficient of ``x_i^{2k}`` in ``L_eff,k``: ``r^{-kn}`` times the bouquet sum."""
    return bouquet_sum(n, m, k, alpha0, d) / Fraction(2 ** d) ** (k * n)


def c_eff_from_b_eff(g: MultiGraph, b_eff: Callable[[MultiGraph], object], _cache=None):
    """``c(g) = b(g) - sum_{e <= h < g} w(h) c(h) b(g/h)`` anchored at the first edge.

    ``w`` counts the labelled ways of choosing ``h`` (the same weights as
    for the cumulant recursion).  Only the forward direction is implemented;
    existence of the ``b`` limits is an input, not a conclusion.
    """
    from math import comb

    cache = {} if _cache is None else _cache
    if g.edges in cache:
        return cache[g.edges]
    anchor = g.edges[0]
    counts = g.counts()
    total = b_eff(g)
    for h in sub_multisets(g):
        hc = h.counts()
        if hc.get(anchor, 0) == 0 or h.size == g.size:
            continue
        w = comb(counts[anchor] - 1, hc[anchor] - 1)
        for e, c in hc.items():
            if e != anchor:
                w *= comb(counts[e], c)
        total = total - w * c_eff_from_b_eff(h, b_eff, cache) * b_eff(g.divide(h))
    cache[g.edges] = total
    return total


# -- limits -------------------------------------------------------------------

@dataclass
class LimitReport:
    values: List[Fraction]
    differences: List[float]
    ratios: List[float]
    limit: float
    converged: bool
    monotone_decay: bool
    envelope: Optional[float] = None

    @property
    def within_envelope(self) -> Optional[bool]:
        if self.envelope is None:
            return None
        return abs(self.limit) <= self.envelope


def extrapolate(values: Sequence) -> LimitReport:
    """Geometric extrapolation from successive differences.

    Converged when the last three difference ratios agree within 1%.
    """
    vals = [Fraction(v) if isinstance(v, (int, Fraction)) else v for v in values]
    diffs = [float(b - a) for a, b in zip(vals, vals[1:])]
    ratios = [b / a for a, b in zip(diffs, diffs[1:]) if a != 0]
    last = float(vals[-1])
    if len(diffs) >= 2 and diffs[-2] != 0 and diffs[-1] != diffs[-2]:
        q = diffs[-1] / diffs[-2]
        limit = last + diffs[-1] * q / (1 - q) if abs(q) < 1 else last
    else:
        limit = last
    converged = all(d == 0 for d in diffs[-2:]) if diffs else True
    if len(ratios) >= 3:
        tail = ratios[-3:]
        converged = converged or max(tail) - min(tail) <= 0.01 * max(abs(t) for t in tail)
    monotone = all(abs(b) <= abs(a) for a, b in zip(diffs, diffs[1:]))
    return LimitReport(vals, diffs, ratios, limit, converged, monotone)


def mass_envelope(n: int, k: int, alpha0, d: int = 1) -> float:
    """Right-hand side of the Case-1 bound, summed over support sizes.

    ``sum_l {k brace l} * (alpha_0)_2^k / r^{2nk} * alpha_n^{-k}
    * alpha_n^{l-k} (1 + alpha_n)^{-k} * sum_p (p-1)! {k brace p}``.
    """
    fam = GammaFamily(alpha0, 1, d)
    a = float(fam.alpha(n))
    pref = float(pochhammer(fam.alpha0, 2)) ** k / float(fam.r) ** (2 * n * k) * a ** (-k)
    moebius = sum(math.factorial(p - 1) * int(stirling(k, p)) for p in range(1, k + 1))
    return sum(int(stirling(k, ell)) * pref * a ** (ell - k) * (1 + a) ** (-k)
               for ell in range(1, k + 1)) * moebius


def mass_coefficient_limit(n: int, k: int, alpha0, d: int = 1, m_max: int = 6) -> LimitReport:
    values = [bouquet_sum(n, m, k, alpha0, d) for m in range(1, m_max + 1)]
    report = extrapolate(values)
    report.envelope = mass_envelope(n, k, alpha0, d)
    return report


@dataclass
class EffectiveSeries:
    """Per-site coefficients ``L~_eff,k`` of the mass case with their m-sequences."""

    n: int
    alpha0: Fraction
    d: int
    sequences: Dict[int, List[Fraction]] = field(default_factory=dict)
    limits: Dict[int, float] = field(default_factory=dict)

    def coefficient(self, k: int) -> float:
        return self.limits[k]


def mass_effective_series(n: int, alpha0, d: int = 1, k_max: int = 4, m_max: int = 6) -> EffectiveSeries:
    series = EffectiveSeries(n, Fraction(alpha0), d)
    for k in range(1, k_max + 1):
        rep = mass_coefficient_limit(n, k, alpha0, d, m_max)
        series.sequences[k] = rep.values
        series.limits[k] = rep.limit
    return series


# -- power counting -----------------------------------------------------------

@dataclass(frozen=True)
class DiagramClass:
    """A fine diagram attached to a source vertex ``0`` of the window.

    Vertex ``s >= 1`` is the image of the source under the ``s``-th chosen
    shift map, so ``(0, 1)`` is a branch and ``(0, 0)`` a loop.  ``ell`` is
    the stratum of the source (number of defined shifts).
    """

    name: str
    edges: Tuple[Tuple[int, int], ...]
    ell: object = 0

    @property
    def k(self) -> int:
        return len(self.edges)

    @property
    def loops(self) -> int:
        return sum(1 for a, b in self.edges if a == b)

    def degrees(self) -> Dict[int, int]:
        deg: Dict[int, int] = {}
        for a, b in self.edges:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        return deg

    def with_stratum(self, ell) -> "DiagramClass":
        return DiagramClass(self.name, self.edges, ell)


def power_count(diagram: DiagramClass, d) -> object:
    """Exponent ``a`` with contribution ``~ eps^{-a m}``.

    Stratum size ``eps^{-m ell}``, ``eps^{-m}`` per edge, ``r^{-m}`` per loop,
    ``r^{m(deg - 1)}`` per vertex and the ``r^{-km}`` prefactor.  Works on
    integers or sympy symbols.
    """
    k = diagram.k
    vertex = sum(deg - 1 for deg in diagram.degrees().values())
    return diagram.ell + k - d * diagram.loops + d * vertex - d * k


LOOP = DiagramClass("loop", ((0, 0),))
BRANCH = DiagramClass("branch", ((0, 1),))
EIGHT = DiagramClass("eight", ((0, 0), (0, 0)))
TADPOLE = DiagramClass("tadpole", ((0, 0), (0, 1)))
ELL = DiagramClass("ell", ((0, 1), (0, 2)))
EYE = DiagramClass("eye", ((0, 1), (0, 1)))
NAMED = {c.edges: c.name for c in (LOOP, BRANCH, EIGHT, TADPOLE, ELL, EYE)}


def canonical_shape(word: Sequence[int]) -> Tuple[Tuple[int, int], ...]:
    """Shape of a word of edge tokens (0 = loop, s > 0 = branch along shift s).

    Shift directions are relabelled in order of first appearance after
    sorting by multiplicity, so the shape does not depend on which concrete
    directions were used.
    """
    counts: Dict[int, int] = {}
    for t in word:
        if t:
            counts[t] = counts.get(t, 0) + 1
    order = sorted(counts, key=lambda s: (-counts[s], s))
    relabel = {s: i + 1 for i, s in enumerate(order)}
    edges = [(0, 0) for t in word if t == 0]
    for s in order:
        edges += [(0, relabel[s])] * counts[s]
    return tuple(sorted(edges))


def shape_name(edges: Tuple[Tuple[int, int], ...]) -> str:
    if edges in NAMED:
        return NAMED[edges]
    loops = sum(1 for e in edges if e == (0, 0))
    branches: Dict[int, int] = {}
    for a, b in edges:
        if b:
            branches[b] = branches.get(b, 0) + 1
    parts = [f"L{loops}"] + [f"B{c}" for c in sorted(branches.values(), reverse=True)]
    return "".join(parts)


def _kinetic_weights(family: GammaFamily, level: int):
    a = family.alpha(level)
    loop = family.d * a * EPS ** (-level) / (1 + a)
    return loop, -EPS ** (-level)


def class_values(n: int, m: int, k: int, alpha0, d: int) -> Dict[Tuple, Fraction]:
    """Sum of ``c(h) chi~(h) / r^{km}`` per (shape, stratum) over single-source words.

    Every source in the fine window is enumerated; a word is a ``k``-tuple of
    edges each of which is the loop at the source or a branch to one of its
    shifted neighbours.
    """
    if m < 1:
        raise ValueError("the window needs m >= 1")
    fam = GammaFamily(alpha0, 1, d)
    N = n + m
    loop_w, edge_w = _kinetic_weights(fam, N)
    window = FineWindow(d, m)
    calc = ChiCalculator(fam, n)
    rm = Fraction(fam.r ** m)
    out: Dict[Tuple, Fraction] = {}
    for ell in range(d + 1):
        for lam in stratum(window, ell):
            src = window.local_index(lam)
            dirs = [s for s in range(1, d + 1) if lam[s - 1] < window.side]
            targets = {}
            for s in dirs:
                p = list(lam)
                p[s - 1] += 1
                targets[s] = window.local_index(tuple(p))
            for word in product([0] + dirs, repeat=k):
                edges = [(src, src) if t == 0 else (src, targets[t]) for t in word]
                weight = Fraction(1)
                for t in word:
                    weight *= loop_w if t == 0 else edge_w
                g = MultiGraph(tuple(edges), N, d)
                key = (canonical_shape(word), ell)
                out[key] = out.get(key, Fraction(0)) + weight * calc.chi(g).coeff / rm ** k
    return out


def bouquet_value(n: int, m: int, ell: int, alpha0, d: int) -> Fraction:
    """Closed form of one bouquet stratum: ``r^-m C(d,l) (2^m-1)^l (d-l) eps^{-n-m} a_n/(1+a_n)``."""
    fam = GammaFamily(alpha0, 1, d)
    a = fam.alpha(n)
    return (Fraction(stratum_size(d, m, ell), fam.r ** m) * (d - ell)
            * EPS ** (-n - m) * a / (1 + a))


@dataclass
class ScanRow:
    cls: str
    ell: int
    m: int
    value: Fraction
    slope: Optional[float]
    predicted: int
    verdict: str

    def as_record(self) -> Dict[str, object]:
        return {"class": self.cls, "ell": self.ell, "m": self.m, "value": self.value,
                "fitted_slope": self.slope, "predicted_exponent": self.predicted,
                "verdict": self.verdict}


def slope_matches(slope: float, exponent: int) -> bool:
    target = exponent * math.log(2)
    return abs(slope - target) <= max(0.05 * abs(target), 0.05)


def fit_slope(ms: Sequence[int], values: Sequence) -> Optional[float]:
    vals = [float(v) for v in values]
    if any(v == 0 for v in vals):
        return None
    signs = {v > 0 for v in vals}
    if len(signs) > 1:
        return None
    slope, _ = np.polyfit(np.asarray(ms, dtype=float), np.log(np.abs(vals)), 1)
    return float(slope)


def divergence_scan(n: int, alpha0, d: int, k: int, m_range: Sequence[int]) -> List[ScanRow]:
    """Fit ``log|value|`` against ``m`` per diagram class and compare with power counting.

    For ``k = 1`` the bouquet (loop plus its branches at one source) is
    reported alongside its two pieces.
    """
    if not 1 <= d <= 2:
        raise ValueError("divergence scan supports d <= 2")
    if not 1 <= k <= 3:
        raise ValueError("divergence scan supports k <= 3")
    ms = sorted(m_range)
    if len(ms) < 2 or ms[0] < 1 or ms[-1] > MAX_M:
        raise ValueError(f"need at least two refinements within 1..{MAX_M}")
    per_m = {m: class_values(n, m, k, alpha0, d) for m in ms}
    if k == 1:
        for m in ms:
            vals = per_m[m]
            for ell in range(d + 1):
                total = vals.get((LOOP.edges, ell), 0) + vals.get((BRANCH.edges, ell), 0)
                vals[(("bouquet",), ell)] = Fraction(total)
    keys = sorted({key for vals in per_m.values() for key in vals}, key=lambda t: (str(t[0]), t[1]))
    rows: List[ScanRow] = []
    for shape, ell in keys:
        seq = [per_m[m].get((shape, ell), Fraction(0)) for m in ms]
        if shape == ("bouquet",):
            name = "bouquet"
            predicted = power_count(LOOP.with_stratum(ell), d)
        else:
            name = shape_name(shape)
            predicted = power_count(DiagramClass(name, shape, ell), d)
        slope = fit_slope(ms, seq)
        if slope is None:
            verdict = "cancelled" if all(v == 0 for v in seq) else "degenerate"
        else:
            kind = "divergent" if predicted > 0 else "finite" if predicted == 0 else "vanishing"
            verdict = kind + (":match" if slope_matches(slope, predicted) else ":mismatch")
        for m, v in zip(ms, seq):
            rows.append(ScanRow(name, ell, m, v, slope, predicted, verdict))
    return rows


def counterterm_coefficient(n: int, alpha0, d: int) -> Fraction:
    """Loop coefficient ``d alpha_n eps^-n / (1 + alpha_n)`` of the renormalized kinetic form."""
    fam = GammaFamily(alpha0, 1, d)
    a = fam.alpha(n)
    return d * a * EPS ** (-n) / (1 + a)


def b_eff_edge_total(n: int, m: int, alpha0, d: int) -> Fraction:
    """Single-edge contribution summed over every class and stratum of the window."""
    return sum(class_values(n, m, 1, alpha0, d).values(), Fraction(0))


# -- Jensen bound ---------------------------------------------------------------

@dataclass
class JensenReport:
    lower: float
    upper: float
    estimate: float
    se: float
    samples: int

    @property
    def inside(self) -> bool:
        return self.lower < self.estimate < self.upper

    @property
    def gap_in_se(self) -> float:
        return (self.estimate - self.lower) / self.se if self.se > 0 else math.inf

    @property
    def passed(self) -> bool:
        return self.inside


def jensen_lower_bound(alpha0, beta0=1, coupling=1.0) -> float:
    """``int exp(-coupling x^2) f_0(x) dx``; the level-0 conditional mean of the mass term is ``x^2``."""
    fam = GammaFamily(alpha0, beta0, 1)
    val, _ = integrate.quad(lambda x: math.exp(-coupling * x * x) * fam.density(np.array([x]), 0)[0],
                            0, np.inf, limit=200)
    return val


def jensen_bounds_check(n: int, alpha0, samples: int, seed: int, beta0=1, d: int = 1,
                        coupling: float = 1.0, chunk: int = 200_000) -> JensenReport:
    """Monte Carlo ``E[exp(-coupling * L_ren^n)]`` for the mass term at level ``n``."""
    from .mc_oracle import chunk_generators

    fam = GammaFamily(alpha0, beta0, d)
    sites = fam.r ** n
    c = float(mass_coefficient(n, fam.alpha0, d))
    sums, sq = [], []
    for rng, size in chunk_generators(seed, samples, chunk):
        x = rng.gamma(float(fam.alpha(n)), 1.0 / float(fam.beta(n)), size=(size, sites))
        vals = np.exp(-coupling * c * np.sum(x * x, axis=1) / sites)
        sums.append(math.fsum(vals))
        sq.append(math.fsum(vals * vals))
    mean = math.fsum(sums) / samples
    var = max(math.fsum(sq) / samples - mean * mean, 0.0)
    lower = jensen_lower_bound(fam.alpha0, fam.beta0, coupling) if coupling else 1.0
    return JensenReport(lower, 1.0, mean, math.sqrt(var / samples), samples)
