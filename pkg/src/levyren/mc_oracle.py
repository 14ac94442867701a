"""Monte Carlo verification of the closed-form identities.

Fine fields are drawn iid per site at level ``n+m``; coarse values are exact
block means.  A conditional identity ``E[F | x^n] = Fhat(x^n)`` is tested
weakly: ``E[F H(x^n)]`` and ``E[Fhat(x^n) H(x^n)]`` are estimated on the same
draws and the paired difference is compared with its standard error.

Chunks get their own child seeds, so results do not depend on how chunks are
distributed over workers; per-chunk sums are combined with ``math.fsum``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import Polynomial
from .condexp import CoefficientPolynomial, cond_exp_power, cross_moment_yy, gamma_cond_exp_monomial
from .reference import GammaFamily, GaussianFamily, ReferenceFamily

DEFAULT_CHUNK = 100_000


def chunk_generators(seed: int, count: int, chunk: int = DEFAULT_CHUNK) -> Iterator[Tuple[np.random.Generator, int]]:
    """Independent generators for consecutive chunks of ``count`` draws."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if chunk < 1:
        raise ValueError("chunk must be >= 1")
    sizes = [chunk] * (count // chunk) + ([count % chunk] if count % chunk else [])
    for child, size in zip(np.random.SeedSequence(seed).spawn(len(sizes)), sizes):
        yield np.random.default_rng(child), size


@dataclass
class FieldSample:
    """``count`` fine fields at level ``n+m`` (flat lexicographic order)."""

    fine: np.ndarray
    n: int
    m: int
    d: int
    seed: int

    @property
    def count(self) -> int:
        return self.fine.shape[0]

    def coarse(self, level: Optional[int] = None) -> np.ndarray:
        """Block means at ``level`` (default ``n``)."""
        level = self.n if level is None else level
        if not self.n <= level <= self.n + self.m:
            raise ValueError(f"level {level} outside {self.n}..{self.n + self.m}")
        block = (2 ** self.d) ** (self.n + self.m - level)
        return self.fine.reshape(self.count, -1, block).mean(axis=2)


def _draw(family: ReferenceFamily, level: int, rng: np.random.Generator, shape) -> np.ndarray:
    if isinstance(family, GammaFamily):
        return rng.gamma(float(family.alpha(level)), 1.0 / float(family.beta(level)), size=shape)
    if isinstance(family, GaussianFamily):
        return rng.normal(0.0, math.sqrt(float(family.sigma(level))), size=shape)
    raise ValueError(f"no sampler for the {family.kind} family")


def sample_field(family: ReferenceFamily, n: int, m: int, count: int, seed: int,
                 chunk: int = DEFAULT_CHUNK) -> Iterator[FieldSample]:
    if n < 0 or m < 0:
        raise ValueError("levels must be non-negative")
    sites = family.r ** (n + m)
    for rng, size in chunk_generators(seed, count, chunk):
        yield FieldSample(_draw(family, n + m, rng, (size, sites)), n, m, family.d, seed)


# -- test functions and identities ---------------------------------------------

TEST_FUNCTIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "1": lambda xc: np.ones(xc.shape[0]),
    "x_i": lambda xc: xc[:, 0],
    "x_i^2": lambda xc: xc[:, 0] ** 2,
    "sum_x^2": lambda xc: np.sum(xc ** 2, axis=1),
}


def poly_values(p: CoefficientPolynomial, x: np.ndarray) -> np.ndarray:
    return np.polynomial.polynomial.polyval(x, [float(c) for c in p.coeffs])


def field_values(p: Polynomial, columns: np.ndarray) -> np.ndarray:
    """Evaluate a site polynomial on ``columns[:, site]`` with float coefficients."""
    out = np.zeros(columns.shape[0])
    for mono, c in p.terms.items():
        term = np.full(columns.shape[0], float(c))
        for s in mono:
            term = term * columns[:, s]
        out += term
    return out


@dataclass(frozen=True)
class Identity:
    """``E[statistic(fine) | x^n] = closed(x^n)`` on the configuration ``(family, n, m)``."""

    id: str
    family: ReferenceFamily
    n: int
    m: int
    statistic: Callable[[FieldSample], np.ndarray]
    closed: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class WeakTestReport:
    identity: str
    test_function: str
    estimate: float
    reference: float
    se: float
    z: float
    samples: int

    @property
    def difference(self) -> float:
        return self.estimate - self.reference

    @property
    def passed(self) -> bool:
        if self.se == 0:
            return self.difference == 0
        return abs(self.difference) < self.z * self.se

    def to_json(self) -> Dict[str, object]:
        return {"identity": self.identity, "test_function": self.test_function,
                "estimate": self.estimate, "reference": self.reference, "se": self.se,
                "z": self.z, "pass": self.passed}


class DegenerateTestFunction(ValueError):
    pass


def _chunk_sums(identity: Identity, test_functions: Sequence[str], sample: FieldSample):
    xc = sample.coarse()
    f = identity.statistic(sample)
    fh = identity.closed(xc)
    out = {}
    for h in test_functions:
        hv = TEST_FUNCTIONS[h](xc)
        a, b = f * hv, fh * hv
        out[h] = (math.fsum(a), math.fsum(b), math.fsum((a - b) ** 2), bool(np.any(hv != 0)))
    return out


def weak_test(identity: Identity, test_functions: Sequence[str] = tuple(TEST_FUNCTIONS),
              count: int = 10 ** 6, seed: int = 0, z: float = 5.0,
              chunk: int = DEFAULT_CHUNK, workers: int = 1) -> List[WeakTestReport]:
    """Paired weak test; ``workers`` threads only change wall time, never the report."""
    for h in test_functions:
        if h not in TEST_FUNCTIONS:
            raise ValueError(f"unknown test function {h!r}")
    samples = sample_field(identity.family, identity.n, identity.m, count, seed, chunk)
    task = lambda s: _chunk_sums(identity, test_functions, s)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(task, samples))
    else:
        chunks = [task(s) for s in samples]
    reports = []
    for h in test_functions:
        if not any(c[h][3] for c in chunks):
            raise DegenerateTestFunction(f"test function {h} vanishes on every draw")
        est = math.fsum(c[h][0] for c in chunks) / count
        ref = math.fsum(c[h][1] for c in chunks) / count
        diff = est - ref
        var = max(math.fsum(c[h][2] for c in chunks) / count - diff * diff, 0.0)
        reports.append(WeakTestReport(identity.id, h, est, ref, math.sqrt(var / count), z, count))
    return reports


def _cond_exp_identity(family, n, m, k) -> Identity:
    poly = cond_exp_power(family, n, m, k)
    return Identity(f"cond_exp_k{k}", family, n, m,
                    lambda s: s.fine[:, 0] ** k, lambda xc: poly_values(poly, xc[:, 0]))


def _cross_identity(family, n, m) -> Identity:
    cross = cross_moment_yy(family, n, m) + CoefficientPolynomial((0, 0, 1))
    return Identity("cross_moment", family, n, m,
                    lambda s: s.fine[:, 0] * s.fine[:, 1], lambda xc: poly_values(cross, xc[:, 0]))


def _monomial_identity(family, n, m, exps) -> Identity:
    coef = float(gamma_cond_exp_monomial(family, n, m, list(exps)))
    total = sum(exps)

    def stat(s):
        out = np.ones(s.count)
        for j, e in enumerate(exps):
            out = out * s.fine[:, j] ** e
        return out

    return Identity("gamma_monomial_" + "_".join(map(str, exps)), family, n, m,
                    stat, lambda xc: coef * xc[:, 0] ** total)


def _kinetic_identity(family, n, m) -> Identity:
    from .kinetic import cond_exp_t_app, t_app_form

    predicted = cond_exp_t_app(family, n, m).predicted()
    fine_form = t_app_form(n + m, family.d).polynomial()
    return Identity(f"kinetic_n{n}_m{m}", family, n, m,
                    lambda s: field_values(fine_form, s.fine), lambda xc: field_values(predicted, xc))


def _kinetic_brute_identity(family, n, m) -> Identity:
    from .kinetic import cond_exp_t_app_brute, t_app_form

    brute = cond_exp_t_app_brute(family, n, m)
    fine_form = t_app_form(n + m, family.d).polynomial()
    return Identity(f"kinetic_brute_n{n}_m{m}", family, n, m,
                    lambda s: field_values(fine_form, s.fine), lambda xc: field_values(brute, xc))


def _wick_identity(family, n, m, k) -> Identity:
    from .wick import wick_closed_form

    fine = wick_closed_form(family, n + m, k).polynomial()
    coarse = wick_closed_form(family, n, k).polynomial()
    return Identity(f"wick_martingale_k{k}", family, n, m,
                    lambda s: poly_values(fine, s.fine[:, 0]), lambda xc: poly_values(coarse, xc[:, 0]))


def _mass_moment_identity(family, n, m, k) -> Identity:
    from .effective import mass_lren
    from .graphs import lagrangian_cumulant, moments_from_lagrangian_cumulants

    form = mass_lren(n + m, family.alpha0, family.d)
    cumulants = {j: lagrangian_cumulant(form, j, n, family) for j in range(1, k + 1)}
    closed = moments_from_lagrangian_cumulants(cumulants, k)
    poly = form.polynomial()
    return Identity(f"mass_cumulant_k{k}", family, n, m,
                    lambda s: field_values(poly, s.fine) ** k, lambda xc: field_values(closed, xc))


def registered_identities(family: ReferenceFamily, n: int = 0, m: int = 1) -> List[Identity]:
    """Every closed-form identity that applies to ``family`` at ``(n, m)``.

    The kinetic theorem needs ``n >= 1`` (on the one-site torus the fine
    boundary edges wrap onto the same coarse site), so it is registered at
    ``n = max(n, 1)`` next to the brute-force sum at ``n`` itself.
    """
    ids = [_cond_exp_identity(family, n, m, k) for k in (1, 2, 3)]
    if m >= 1:
        ids.append(_cross_identity(family, n, m))
        ids.append(_kinetic_identity(family, max(n, 1), m))
        ids.append(_kinetic_brute_identity(family, n, m))
    ids += [_wick_identity(family, n, m, k) for k in (2, 3)]
    if isinstance(family, GammaFamily):
        if family.r ** m >= 2:
            ids.append(_monomial_identity(family, n, m, (2, 1)))
            ids.append(_monomial_identity(family, n, m, (1, 1)))
        ids += [_mass_moment_identity(family, n, m, k) for k in (2, 3)]
    return ids


def run_registry(family: ReferenceFamily, count: int = 10 ** 6, seed: int = 0, z: float = 5.0,
                 n: int = 0, m: int = 1, workers: int = 1) -> List[WeakTestReport]:
    out = []
    for i, ident in enumerate(registered_identities(family, n, m)):
        out += weak_test(ident, count=count, seed=seed + i, z=z, workers=workers)
    return out


# -- concrete moment checks ----------------------------------------------------

@dataclass(frozen=True)
class MomentEstimate:
    estimate: float
    se: float
    exact: float
    z: float

    @property
    def passed(self) -> bool:
        return abs(self.estimate - self.exact) < self.z * self.se


def moment_estimate(family: ReferenceFamily, n: int, m: int, k: int, level: int,
                    count: int, seed: int, z: float = 5.0) -> MomentEstimate:
    """``E[x^k]`` at one site of ``level`` against the closed-form marginal moment."""
    vals, sq = [], []
    for sample in sample_field(family, n, m, count, seed):
        x = sample.coarse(level)[:, 0] ** k
        vals.append(math.fsum(x))
        sq.append(math.fsum(x * x))
    mean = math.fsum(vals) / count
    var = max(math.fsum(sq) / count - mean * mean, 0.0)
    return MomentEstimate(mean, math.sqrt(var / count), float(marginal_moment(family, level, k)), z)


def marginal_moment(family: ReferenceFamily, level: int, k: int):
    """Raw moment of the level-``level`` marginal."""
    if isinstance(family, GammaFamily):
        from .algebra import pochhammer

        return pochhammer(family.alpha(level), k) / family.beta(level) ** k
    if isinstance(family, GaussianFamily):
        from .algebra import double_factorial_odd

        return 0 if k % 2 else double_factorial_odd(k // 2) * family.sigma(level) ** (k // 2)
    raise ValueError(f"no closed-form moments for the {family.kind} family")


@dataclass(frozen=True)
class ConcreteCheck:
    fine: MomentEstimate
    coarse: MomentEstimate
    ratio: Fraction
    paired: WeakTestReport

    @property
    def passed(self) -> bool:
        return self.fine.passed and self.coarse.passed and self.paired.passed


def fine_second_moment_check(count: int = 10 ** 6, seed: int = 0, z: float = 5.0) -> ConcreteCheck:
    """Gamma(1,1), d=1, n=0, m=1: ``E[x_fine^2] = 3 = (3/2) E[x_coarse^2]``."""
    fam = GammaFamily(1, 1, 1)
    ident = _cond_exp_identity(fam, 0, 1, 2)
    ratio = Fraction(marginal_moment(fam, 1, 2)) / Fraction(marginal_moment(fam, 0, 2))
    return ConcreteCheck(moment_estimate(fam, 0, 1, 2, 1, count, seed, z),
                         moment_estimate(fam, 0, 1, 2, 0, count, seed, z), ratio,
                         weak_test(ident, ("1",), count, seed, z)[0])


# -- cumulants of a Lagrangian ---------------------------------------------------

def mc_cumulants(form, family: GammaFamily, n: int, orders: Sequence[int] = (1, 2, 3),
                 count: int = 10 ** 6, seed: int = 0, z: float = 5.0, coupling=1,
                 test_functions: Sequence[str] = ("1", "x_i")) -> Dict[int, List[WeakTestReport]]:
    """Weak check of ``E[(coupling L)^k | x^n]`` against moments rebuilt from ``L_eff``.

    ``form`` is a quadratic form at level ``n + m``.  With ``coupling = 0``
    every moment of order ``>= 1`` is zero on both sides.
    """
    from .graphs import lagrangian_cumulant, moments_from_lagrangian_cumulants

    if max(orders) > 3:
        raise ValueError("orders above 3 are out of scope")
    m = form.n - n
    if m < 0:
        raise ValueError("form level below the conditioning level")
    c = Fraction(coupling) if isinstance(coupling, (int, Fraction)) else coupling
    cumulants = {j: lagrangian_cumulant(form, j, n, family) * c ** j for j in range(1, max(orders) + 1)}
    poly = form.polynomial()
    out = {}
    for k in orders:
        closed = moments_from_lagrangian_cumulants(cumulants, k)
        ident = Identity(f"lagrangian_moment_k{k}", family, n, m,
                         lambda s, k=k: (float(c) * field_values(poly, s.fine)) ** k,
                         lambda xc, closed=closed: field_values(closed, xc))
        reports = weak_test(ident, test_functions, count, seed + k, z)
        for r in reports:
            if r.se > 1e6 * max(abs(r.reference), 1.0):
                raise FloatingPointError(f"standard error blow-up for order {k}")
        out[k] = reports
    return out


def se_scaling(identity: Identity, test_function: str = "1", counts: Sequence[int] = (10 ** 4, 10 ** 5, 10 ** 6),
               seed: int = 0) -> List[float]:
    """``se * sqrt(count)`` per count; roughly constant when the estimator is well behaved."""
    return [weak_test(identity, (test_function,), n, seed)[0].se * math.sqrt(n) for n in counts]
