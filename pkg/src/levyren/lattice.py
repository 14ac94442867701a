"""Hierarchical hypercube lattice on the torus [0,1]^d.

A site at level ``n`` is addressed by its refinement path ``(i_1, ..., i_n)``
with every ``i_k`` in ``1..r`` (``r = 2**d``).  Sites are ordered
lexicographically by path, which makes the flat index of a site equal to
``sum((i_k - 1) * r**(n-k))``; the descendants of a coarse site therefore
occupy a contiguous block of ``r**m`` flat indices at level ``n + m``.

Child ``c`` of a cell sits at the binary offset given by the ``d`` bits of
``c - 1`` (most significant bit is the first coordinate).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb
from typing import Iterator, List, Optional, Sequence, Tuple

SiteIndex = Tuple[int, ...]
Point = Tuple[int, ...]

EPS = Fraction(1, 2)


@dataclass(frozen=True)
class LatticeConfig:
    d: int

    def __post_init__(self):
        if not isinstance(self.d, int) or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d!r}")

    @property
    def r(self) -> int:
        return 2 ** self.d

    @property
    def eps(self) -> Fraction:
        return EPS

    def side(self, n: int) -> int:
        """Number of cells per side at level ``n`` (``eps**-n``)."""
        return 2 ** n

    def sidelength(self, n: int) -> Fraction:
        return EPS ** n

    def cell_volume(self, n: int) -> Fraction:
        return Fraction(1, self.r ** n)

    def n_sites(self, n: int) -> int:
        return self.r ** n

    def sites(self, n: int) -> Iterator[SiteIndex]:
        return product(range(1, self.r + 1), repeat=n)


def children(site: SiteIndex, config: LatticeConfig) -> List[SiteIndex]:
    return [tuple(site) + (c,) for c in range(1, config.r + 1)]


def parent(site: SiteIndex) -> SiteIndex:
    if not site:
        raise ValueError("the root cell has no parent")
    return tuple(site[:-1])


def ancestor(site: SiteIndex, n: int) -> SiteIndex:
    if n > len(site):
        raise ValueError("ancestor level exceeds site level")
    return tuple(site[:n])


def flat_index(site: SiteIndex, config: LatticeConfig) -> int:
    f = 0
    for c in site:
        f = f * config.r + (c - 1)
    return f


def site_from_flat(f: int, n: int, config: LatticeConfig) -> SiteIndex:
    path = []
    for _ in range(n):
        f, c = divmod(f, config.r)
        path.append(c + 1)
    if f:
        raise ValueError("flat index out of range for this level")
    return tuple(reversed(path))


def site_to_coords(site: SiteIndex, config: LatticeConfig) -> Point:
    """0-based integer coordinates of the cell on the ``2**n`` grid."""
    d = config.d
    coords = [0] * d
    for c in site:
        bits = c - 1
        for k in range(d):
            coords[k] = 2 * coords[k] + ((bits >> (d - 1 - k)) & 1)
    return tuple(coords)


def coords_to_site(coords: Sequence[int], n: int, config: LatticeConfig) -> SiteIndex:
    d = config.d
    side = 2 ** n
    if len(coords) != d or any(not 0 <= x < side for x in coords):
        raise ValueError(f"coordinates {tuple(coords)} outside the level-{n} grid")
    path = []
    for level in range(n):
        shift = n - 1 - level
        bits = 0
        for k in range(d):
            bits = 2 * bits + ((coords[k] >> shift) & 1)
        path.append(bits + 1)
    return tuple(path)


def coarse_neighbors(site: SiteIndex, config: LatticeConfig) -> List[SiteIndex]:
    """The 2d torus neighbours of ``site``, repeated when the torus is small.

    Order: for each coordinate, the ``+1`` neighbour then the ``-1`` one.
    """
    n = len(site)
    side = 2 ** n
    coords = site_to_coords(site, config)
    out = []
    for k in range(config.d):
        for step in (1, -1):
            c = list(coords)
            c[k] = (c[k] + step) % side
            out.append(coords_to_site(c, n, config))
    return out


def torus_edges(n: int, config: LatticeConfig) -> List[Tuple[int, int]]:
    """Nearest-neighbour edges at level ``n`` as flat-index pairs.

    One edge per (site, positive direction): ``d * r**n`` edges in total,
    so a side-2 torus carries two distinct edges between the same pair and a
    side-1 torus carries self-edges.
    """
    side = 2 ** n
    out = []
    for f in range(config.n_sites(n)):
        site = site_from_flat(f, n, config)
        coords = site_to_coords(site, config)
        for k in range(config.d):
            c = list(coords)
            c[k] = (c[k] + 1) % side
            out.append((f, flat_index(coords_to_site(c, n, config), config)))
    return out


@dataclass(frozen=True)
class FineWindow:
    """The ``r**m`` children of one coarse cell seen as the grid {1..2^m}^d.

    Adjacency inside the window never wraps.
    """

    d: int
    m: int

    def __post_init__(self):
        if self.d < 1 or self.m < 0:
            raise ValueError("window needs d >= 1 and m >= 0")

    @property
    def side(self) -> int:
        return 2 ** self.m

    @property
    def config(self) -> LatticeConfig:
        return LatticeConfig(self.d)

    def __len__(self) -> int:
        return self.side ** self.d

    def points(self) -> Iterator[Point]:
        return product(range(1, self.side + 1), repeat=self.d)

    def contains(self, lam: Sequence[int]) -> bool:
        return len(lam) == self.d and all(1 <= x <= self.side for x in lam)

    def to_child(self, lam: Sequence[int]) -> SiteIndex:
        """Relative path ``j`` in ``I^m`` of the window point ``lam``."""
        return coords_to_site([x - 1 for x in lam], self.m, self.config)

    def from_child(self, j: SiteIndex) -> Point:
        if len(j) != self.m:
            raise ValueError("child path length must equal m")
        return tuple(x + 1 for x in site_to_coords(j, self.config))

    def local_index(self, lam: Sequence[int]) -> int:
        """Offset of ``lam`` inside the contiguous block of fine flat indices."""
        return flat_index(self.to_child(lam), self.config)


def within_region_neighbors(window: FineWindow, lam: Sequence[int]) -> List[Point]:
    if not window.contains(lam):
        raise ValueError(f"{tuple(lam)} is not a point of the window")
    out = []
    for k in range(window.d):
        for step in (1, -1):
            p = list(lam)
            p[k] += step
            if 1 <= p[k] <= window.side:
                out.append(tuple(p))
    return out


def stratum_index(window: FineWindow, lam: Sequence[int]) -> int:
    """Number of coordinates of ``lam`` strictly below the side length."""
    return sum(1 for x in lam if x < window.side)


def stratum(window: FineWindow, ell: int) -> List[Point]:
    if not 0 <= ell <= window.d:
        raise ValueError(f"stratum index must lie in 0..{window.d}, got {ell}")
    return [lam for lam in window.points() if stratum_index(window, lam) == ell]


def stratum_size(d: int, m: int, ell: int) -> int:
    return comb(d, ell) * (2 ** m - 1) ** ell


def shift(window: FineWindow, ell: int, lam: Sequence[int]) -> Optional[Point]:
    """Increment coordinate ``ell`` (1-based); ``None`` off the domain."""
    if not 1 <= ell <= window.d:
        raise ValueError(f"shift direction must lie in 1..{window.d}, got {ell}")
    if not window.contains(lam):
        raise ValueError(f"{tuple(lam)} is not a point of the window")
    if lam[ell - 1] >= window.side:
        return None
    p = list(lam)
    p[ell - 1] += 1
    return tuple(p)


def degree_histogram(window: FineWindow) -> dict:
    """Map within-region degree -> number of window points with that degree."""
    hist: dict = {}
    for lam in window.points():
        k = len(within_region_neighbors(window, lam))
        hist[k] = hist.get(k, 0) + 1
    return hist


def degree_count_formula(d: int, m: int, k: int) -> int:
    """Closed form for the number of window points with ``d + k`` neighbours."""
    return comb(d, k) * 2 ** (d - k) * (2 ** m - 2) ** k
