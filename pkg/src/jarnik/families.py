"""Interval trees: G_p(a), K_M(a), E^J and the thinned families E, F, G.

Families E and G are arithmetic progressions of centers, so any level can be
queried in O(1) per parent even when m_k has thousands of bits.  Families F and
EJ are enumerative (prime denominators), capped by the sieve ceiling.

A level whose selector is ``None`` is the union over all selectors (the "J"
tree); for a progression level that union is a contiguous block of q_k * i_k
centers per parent.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from itertools import combinations
from typing import Iterator, Optional, Sequence

from gmpy2 import mpq, mpz

from .errors import CapacityError, ConfigError, StarvedLevelError
from .exact import (
    DEFAULT_PRECISION,
    Interval,
    Q,
    Rational,
    ceil_q,
    compare_product,
    floor_q,
    fmt,
    gap,
    primes_in,
    radius_bounds,
)

ENUM_CAP = 200_000
PROGRESSION = ("E", "G")
ROOT = Interval(0, 1)


@dataclass(frozen=True, order=True)
class Node:
    """A construction interval together with its nominal center and radius bounds."""

    lo: Rational
    hi: Rational
    center: Rational
    rad_lo: Rational
    rad_hi: Rational

    @property
    def interval(self) -> Interval:
        return Interval(self.lo, self.hi)

    @property
    def length(self) -> Rational:
        return self.hi - self.lo


ROOT_NODE = Node(mpq(0), mpq(1), mpq(1, 2), mpq(1, 2), mpq(1, 2))


# ------------------------------------------------------------------- G_p, K_M


@dataclass(frozen=True)
class GpFamily:
    """Intervals [r/p - rho, r/p + rho], r = 1..p-1, rho a lower bound of p^(-a)."""

    p: int
    a: Rational
    rad_lo: Rational
    rad_hi: Rational
    r_min: int
    r_max: int

    def __len__(self):
        return max(0, self.r_max - self.r_min + 1)

    def nodes(self) -> list[Node]:
        return [Node(mpq(r, self.p) - self.rad_lo, mpq(r, self.p) + self.rad_lo, mpq(r, self.p),
                     self.rad_lo, self.rad_hi) for r in range(self.r_min, self.r_max + 1)]


def build_G_p(p: int, a_k, precision: int = DEFAULT_PRECISION) -> GpFamily:
    a_k = Q(a_k)
    if p < 2:
        raise ValueError("p must be >= 2")
    lo, hi = radius_bounds(p, a_k, precision)
    if not hi < mpq(1, 2 * p):
        raise ConfigError(f"G_p intervals overlap: p={p}, a={fmt(a_k)} needs p^(-a) < 1/(2p)")
    r_min, r_max = p, 0
    for r in range(1, p):
        # inside the open ambient interval (p^-a, 1 - p^-a), certified with the upper radius
        if mpq(r, p) - lo > hi and mpq(r, p) + lo < 1 - hi:
            r_min, r_max = min(r_min, r), max(r_max, r)
    return GpFamily(p, a_k, lo, hi, r_min, r_max)


@dataclass(frozen=True)
class KFamily:
    M: int
    a: Rational
    members: tuple[GpFamily, ...]
    gap_bound: Rational
    route: str
    min_cross_gap: Optional[Rational] = None

    @property
    def primes(self) -> list[int]:
        return [g.p for g in self.members]

    def nodes(self) -> list[tuple[int, Node]]:
        return sorted(((g.p, n) for g in self.members for n in g.nodes()), key=lambda t: t[1])

    def __len__(self):
        return sum(len(g) for g in self.members)


def k_threshold_M(a_k) -> int:
    """Least M with M^(a-2) >= 16."""
    a_k = Q(a_k)
    if a_k <= 2:
        raise ConfigError("the cross-prime threshold needs a > 2")
    M = 2
    while compare_product([(M, a_k - 2)], 16) < 0:
        M += 1
    return M


def build_K(M: int, a_k, precision: int = DEFAULT_PRECISION, route: str = "threshold") -> KFamily:
    """Union of G_p(a) over primes M < p < 2M.

    ``route="threshold"`` requires M^(a-2) >= 16, under which the bound
    1/(8M^2) follows from |r/p - r'/p'| >= 1/(pp').  ``route="exhaustive"``
    certifies the bound by checking every adjacent cross-prime pair.
    """
    a_k = Q(a_k)
    if route not in ("threshold", "exhaustive"):
        raise ValueError(route)
    if route == "threshold" and (a_k <= 2 or compare_product([(M, a_k - 2)], 16) < 0):
        need = k_threshold_M(a_k) if a_k > 2 else None
        raise ConfigError(f"build_K({M}, {fmt(a_k)}): M^(a-2) < 16; minimal admissible M is {need}")
    members = tuple(build_G_p(p, a_k, precision) for p in primes_in(M, 2 * M))
    bound = mpq(1, 8 * M * M)
    fam = KFamily(M, a_k, members, bound, route)
    if route == "exhaustive":
        g = min_cross_prime_gap(fam)
        if g is not None and g < bound:
            raise ConfigError(f"build_K({M}, {fmt(a_k)}): cross-prime gap {fmt(g)} < 1/(8M^2)")
        fam = replace(fam, min_cross_gap=g)
    return fam


def min_cross_prime_gap(fam: KFamily) -> Optional[Rational]:
    """Least gap between intervals from distinct primes, with radii enlarged to the upper bound.

    Checking sorted neighbours suffices: anything between a closest cross pair
    would form a closer cross pair with one of its ends.
    """
    items = fam.nodes()
    best = None
    for (p1, n1), (p2, n2) in zip(items, items[1:]):
        a = Interval(n1.center - n1.rad_hi, n1.center + n1.rad_hi)
        b = Interval(n2.center - n2.rad_hi, n2.center + n2.rad_hi)
        g = gap(a, b)
        if p1 != p2 and (best is None or g < best):
            best = g
    return best


# --------------------------------------------------------------------- levels


@dataclass(frozen=True)
class LevelSpec:
    k: int
    family: str
    m: int
    a_k: Rational
    q: int
    selector: object  # int residue (E, G), tuple of primes (F), None (union / EJ)
    i_k: int
    g_k: Rational
    rad_lo: Rational  # E/EJ/F: bound of m^(-a_k); G: 1/(2m)
    rad_hi: Rational
    pool: tuple[int, ...] = ()
    rule: str = "keep the i_k children with smallest centers"
    i_k_method: str = "exact"

    @property
    def progression(self) -> bool:
        return self.family in PROGRESSION

    @property
    def fanout(self) -> int:
        """Children per parent in this level's tree (q_k * i_k for a progression union level)."""
        if self.progression and self.selector is None:
            return self.q * self.i_k
        return self.i_k

    def with_selector(self, selector) -> "LevelSpec":
        _check_selector(self.family, self.q, self.pool, selector)
        return replace(self, selector=selector)


def _check_selector(family, q, pool, selector):
    if selector is None:
        return
    if family in PROGRESSION:
        if not (isinstance(selector, int) and 0 <= selector < q):
            raise ConfigError(f"selector h must be an integer in [0, {q})")
    elif family == "F":
        H = tuple(selector)
        if len(H) != q or len(set(H)) != q or not set(H) <= set(pool):
            raise ConfigError(f"selector H must be {q} distinct primes from the pool")
    else:
        raise ConfigError("family EJ has no selectors")


def _prog_offsets(fam: str, m: int, rad: Rational) -> tuple[Rational, Rational]:
    # child r occupies [r/m + dl, r/m + dh]
    if fam == "G":
        return mpq(0), mpq(1, m)
    return -rad, rad


def admissible_r_range(fam: str, m: int, rad: Rational, parent: Node | Interval) -> tuple[int, int]:
    """[r_lo, r_hi] of centers r/m whose child interval lies in the parent."""
    dl, dh = _prog_offsets(fam, m, rad)
    # kept as mpz: Python-int arithmetic on numbers with ~10^5 digits is far slower
    lo = ceil_q(m * (parent.lo - dl))
    hi = floor_q(m * (parent.hi - dh))
    if fam == "G":
        return max(mpz(0), lo), min(mpz(m - 1), hi)
    return max(mpz(1), lo), min(mpz(m - 1), hi)


def count_in_class(r_lo: int, r_hi: int, q: int, h: int) -> int:
    if r_hi < r_lo:
        return 0
    first = r_lo + ((h - r_lo) % q)
    return 0 if first > r_hi else (r_hi - first) // q + 1


def count_children(parent: Node | Interval, spec: LevelSpec, selector=None) -> int:
    """Admissible children of ``parent`` before equalization."""
    sel = spec.selector if selector is None else selector
    if spec.progression:
        r_lo, r_hi = admissible_r_range(spec.family, spec.m, spec.rad_lo, parent)
        if sel is None:
            return max(0, r_hi - r_lo + 1)
        return count_in_class(r_lo, r_hi, spec.q, sel)
    primes = spec.pool if sel is None else sel
    return sum(_prime_count(parent, p, spec.a_k) for p in primes)


def _prime_count(parent, p: int, a_k) -> int:
    lo, hi = _prime_r_range(parent, p, a_k)
    return max(0, hi - lo + 1)


def _prime_counts(parent, pool, a_k) -> list[int]:
    """_prime_count for every p in pool, skipping primes with no p*x integral inside the parent."""
    lo_n, lo_d = int(parent.lo.numerator), int(parent.lo.denominator)
    hi_n, hi_d = int(parent.hi.numerator), int(parent.hi.denominator)
    out = []
    for p in pool:
        if -((-p * lo_n) // lo_d) > (p * hi_n) // hi_d:
            out.append(0)
        else:
            out.append(_prime_count(parent, p, a_k))
    return out


def _prime_r_range(parent, p: int, a_k) -> tuple[int, int]:
    rad = radius_bounds(p, a_k)[0]
    return max(1, int(ceil_q(p * (parent.lo + rad)))), min(p - 1, int(floor_q(p * (parent.hi - rad))))


# --------------------------------------------------------------- construction


@dataclass(frozen=True)
class Construction:
    family: str
    levels: tuple[LevelSpec, ...]
    provenance: dict = field(default_factory=dict, compare=False, hash=False)
    _memo: dict = field(default_factory=dict, init=False, compare=False, hash=False, repr=False)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, k: int) -> LevelSpec:
        return self.levels[k - 1]

    def count(self, k: int) -> int:
        n = 1
        for L in self.levels[:k]:
            n *= L.fanout
        return n

    def mass(self, k: int) -> Rational:
        return mpq(1, self.count(k))

    @property
    def is_union(self) -> bool:
        return all(L.selector is None for L in self.levels)

    def selectors(self) -> tuple:
        return tuple(L.selector for L in self.levels)

    def with_selectors(self, selectors: Sequence) -> "Construction":
        """Copy with the first len(selectors) levels pinned to the given selectors."""
        levels = list(self.levels)
        for j, sel in enumerate(selectors):
            levels[j] = levels[j].with_selector(sel)
        return replace(self, levels=tuple(levels))

    def union_tree(self) -> "Construction":
        return replace(self, levels=tuple(replace(L, selector=None) for L in self.levels))

    def truncate(self, k: int) -> "Construction":
        return replace(self, levels=self.levels[:k])

    # -- children

    def _block(self, k: int, parent: Node) -> tuple[int, int, int]:
        """(first r, step, count) of the kept children of ``parent`` at progression level k."""
        L = self.level(k)
        r_lo, r_hi = admissible_r_range(L.family, L.m, L.rad_lo, parent)
        if L.selector is None:
            n = mpz(L.q) * L.i_k
            first, step = r_lo, 1
        else:
            first, step, n = r_lo + ((L.selector - r_lo) % L.q), L.q, mpz(L.i_k)
        if first + (n - 1) * step > r_hi:
            raise StarvedLevelError(f"level {k}: parent {parent.interval} has fewer than {n} children",
                                    parent=parent)
        return first, step, n

    def _prog_node(self, L: LevelSpec, r: int) -> Node:
        if L.family == "G":
            return Node(mpq(r, L.m), mpq(r + 1, L.m), mpq(2 * r + 1, 2 * L.m), L.rad_lo, L.rad_hi)
        c = mpq(r, L.m)
        return Node(c - L.rad_lo, c + L.rad_lo, c, L.rad_lo, L.rad_hi)

    def children(self, k: int, parent: Node, cap: int = ENUM_CAP) -> list[Node]:
        L = self.level(k)
        if L.progression:
            first, step, n = self._block(k, parent)
            if n > cap:
                raise CapacityError(f"level {k}: {n} children per parent exceeds the enumeration cap")
            return [self._prog_node(L, first + j * step) for j in range(n)]
        return self._prime_children(k, parent)[: L.i_k]

    def _prime_children(self, k: int, parent: Node) -> list[Node]:
        key = ("prime_children", k, parent)
        if key not in self._memo:
            self._memo[key] = self._prime_children_uncached(k, parent)
        return self._memo[key]

    def _prime_children_uncached(self, k: int, parent: Node) -> list[Node]:
        L = self.level(k)
        primes = L.pool if L.selector is None else L.selector
        out = []
        lo_n, lo_d = int(parent.lo.numerator), int(parent.lo.denominator)
        hi_n, hi_d = int(parent.hi.numerator), int(parent.hi.denominator)
        for p in primes:
            # cheap integer prefilter: some r with p*lo <= r <= p*hi must exist
            if -((-p * lo_n) // lo_d) > (p * hi_n) // hi_d:
                continue
            rlo, rhi = radius_bounds(p, L.a_k)
            r0, r1 = _prime_r_range(parent, p, L.a_k)
            for r in range(r0, r1 + 1):
                c = mpq(r, p)
                out.append(Node(c - rlo, c + rlo, c, rlo, rhi))
        out.sort()
        if len(out) < L.i_k:
            raise StarvedLevelError(f"level {k}: parent {parent.interval} has {len(out)} < i_k children",
                                    parent=parent)
        return out

    def children_meeting(self, k: int, parent: Node, I: Interval) -> tuple[int, list[Node]]:
        """(number of kept children inside I, kept children meeting I but not inside)."""
        L = self.level(k)
        if not L.progression:
            inside, partial = 0, []
            for ch in self.children(k, parent):
                if I.lo <= ch.lo and ch.hi <= I.hi:
                    inside += 1
                elif ch.lo <= I.hi and I.lo <= ch.hi:
                    partial.append(ch)
            return inside, partial
        first, step, n = self._block(k, parent)
        dl, dh = _prog_offsets(L.family, L.m, L.rad_lo)
        m = L.m

        def diff(x, y):
            # x - y as an unreduced (num, den) pair; reducing million-bit fractions dominates otherwise
            return x.numerator * y.denominator - y.numerator * x.denominator, x.denominator * y.denominator

        def j_range(x_lo, x_hi):
            # j with x_lo <= (first + j*step)/m <= x_hi
            (ln, ld), (hn, hd) = x_lo, x_hi
            lo = -((first * ld - m * ln) // (step * ld))
            hi = (m * hn - first * hd) // (step * hd)
            return max(mpz(0), lo), min(n - 1, hi)

        meet_lo, meet_hi = j_range(diff(I.lo, dh), diff(I.hi, dl))
        if meet_hi < meet_lo:
            return 0, []
        in_lo, in_hi = j_range(diff(I.lo, dl), diff(I.hi, dh))
        inside = max(0, in_hi - in_lo + 1)
        if inside == 0:
            js = range(meet_lo, meet_hi + 1)
            if len(js) > 4:
                raise AssertionError("more than four partial children")
            return 0, [self._prog_node(L, first + j * step) for j in js]
        partial = [self._prog_node(L, first + j * step) for j in range(meet_lo, in_lo)]
        partial += [self._prog_node(L, first + j * step) for j in range(in_hi + 1, meet_hi + 1)]
        return inside, partial

    # -- enumeration

    def enumerate_level(self, k: int, cap: int = ENUM_CAP) -> list[Node]:
        key = ("level", k)
        if self.count(k) > cap:
            raise CapacityError(f"level {k} has {self.count(k)} intervals, above the enumeration cap {cap}")
        if key not in self._memo:
            self._memo[key] = [n for n, _ in self.enumerate_with_parents(k, cap)]
        return self._memo[key]

    def enumerate_with_parents(self, k: int, cap: int = ENUM_CAP) -> list[tuple[Node, int]]:
        """Level-k nodes in sorted order with the index of their level-(k-1) parent."""
        if self.count(k) > cap:
            raise CapacityError(f"level {k} has {self.count(k)} intervals, above the enumeration cap {cap}")
        if k == 0:
            return [(ROOT_NODE, -1)]
        parents = self.enumerate_level(k - 1, cap)
        return [(ch, i) for i, P in enumerate(parents) for ch in self.children(k, P)]

    def node_at(self, k: int, index: int) -> Node:
        """Level-k node with mixed-radix global index (sorted order)."""
        digits = []
        for L in reversed(self.levels[:k]):
            index, d = divmod(index, L.fanout)
            digits.append(d)
        if index:
            raise IndexError("index out of range")
        node = ROOT_NODE
        for j, d in enumerate(reversed(digits), 1):
            node = self.child_at(j, node, d)
        return node

    def child_at(self, k: int, parent: Node, j: int) -> Node:
        L = self.level(k)
        if L.progression:
            first, step, n = self._block(k, parent)
            if not 0 <= j < n:
                raise IndexError(j)
            return self._prog_node(L, first + j * step)
        return self._prime_children(k, parent)[j]

    def chain(self, indices: Sequence[int]) -> list[Node]:
        """Nested chain root -> level len(indices) following child positions."""
        out, node = [], ROOT_NODE
        for k, j in enumerate(indices, 1):
            node = self.child_at(k, node, j)
            out.append(node)
        return out


# ------------------------------------------------------------------ builders


def _prog_level(family, k, m, a_k, q, selector, parents_enum, parent_len, precision):
    """LevelSpec for a progression level; i_k from the union-tree parents."""
    if family == "G":
        rad_lo = rad_hi = mpq(1, 2 * m)
    else:
        rad_lo, rad_hi = radius_bounds(m, a_k, precision)
        if not rad_hi < mpq(1, 2 * m):
            raise ConfigError(f"level {k}: radius m^(-a) must be below 1/(2m) (m={m}, a={fmt(a_k)})")
    if parents_enum is not None:
        per_parent = [(P, count_children(P, _probe_spec(family, m, a_k, q, rad_lo, rad_hi))) for P in parents_enum]
        worst, n = min(per_parent, key=lambda t: t[1])
        i_k, method = n // q, "exact"
    else:
        # every parent has length >= parent_len; a closed window of length L holds >= floor(L) integers
        dl, dh = _prog_offsets(family, m, rad_lo)
        n = int(floor_q(m * (parent_len - (dh - dl)) + (1 if family == "G" else 0)))
        worst, i_k, method = None, max(0, n) // q, "analytic lower bound"
    if i_k == 0:
        raise StarvedLevelError(f"level {k}: some parent has fewer than q_k = {q} admissible children "
                                f"(m={m}, a={fmt(a_k)})", parent=worst)
    if family == "G":
        g = mpq(q - 1, m) if selector is not None else mpq(0)
    else:
        g = mpq(q if selector is not None else 1, m) - 2 * rad_hi
    return LevelSpec(k, family, int(m), Q(a_k), int(q), selector, int(i_k), g, rad_lo, rad_hi,
                     i_k_method=method)


def _probe_spec(family, m, a_k, q, rad_lo, rad_hi):
    return LevelSpec(0, family, int(m), Q(a_k), int(q), None, 1, mpq(0), rad_lo, rad_hi)


def _prime_level(family, k, m, a_k, q, selector, parents_enum, parent_len, precision, ceiling):
    if family == "F":
        pool = tuple(primes_in(m, 2 * m, closed_lo=True, ceiling=ceiling))
        if len(pool) < q:
            raise ConfigError(f"level {k}: only {len(pool)} primes in [{m}, {2 * m}) but q_k = {q}")
    else:
        pool = tuple(primes_in(m, 2 * m, ceiling=ceiling))
        q = 1
    if not pool:
        raise ConfigError(f"level {k}: empty prime pool for m = {m}")
    # p^(a-1) > 2 is monotone in p, so the smallest prime decides disjointness for the pool
    if not radius_bounds(pool[0], a_k, precision)[1] < mpq(1, 2 * pool[0]):
        raise ConfigError(f"level {k}: p^(-a) >= 1/(2p) for p={pool[0]}")
    take = q if family == "F" else len(pool)
    if parents_enum is not None and len(parents_enum) * len(pool) > 20 * ENUM_CAP:
        parents_enum = None
    if parents_enum is not None:
        best, worst = None, None
        for P in parents_enum:
            counts = sorted(_prime_counts(P, pool, a_k))
            tot = sum(counts[:take])
            if best is None or tot < best:
                best, worst = tot, P
        i_k, method = best, "exact"
    else:
        # floor(p (L - 2 p^-a)) grows with p, so the q smallest bounds sit at the q smallest primes
        counts = [max(0, int(floor_q(p * (parent_len - 2 * radius_bounds(p, a_k, precision)[0]))))
                  for p in pool[:take]]
        worst, i_k, method = None, sum(counts), "analytic lower bound"
    if i_k == 0:
        raise StarvedLevelError(f"level {k}: some parent has no admissible child (m={m})", parent=worst)
    rad_lo = radius_bounds(pool[-1], a_k, precision)[0]
    rad_hi = radius_bounds(pool[0], a_k, precision)[1]
    g = mpq(1, 4 * m * m) - 2 * rad_hi
    # family F always carries a concrete H_k; default to the q smallest primes of the pool
    sel = tuple(selector) if selector is not None else (pool[:q] if family == "F" else None)
    return LevelSpec(k, family, int(m), Q(a_k), int(q), sel, int(i_k), g, rad_lo, rad_hi, pool=pool,
                     i_k_method=method)


def build_construction(family: str, m_seq: Sequence[int], a_seq: Sequence, q_seq: Sequence[int] | None = None,
                       selectors: Sequence | None = None, *, precision: int = DEFAULT_PRECISION,
                       enum_cap: int = ENUM_CAP, sieve_ceiling: int | None = None,
                       provenance: dict | None = None) -> Construction:
    """Build all levels; ``selectors[k]`` is h_k (E, G), H_k (F) or None for the union tree."""
    if family not in ("EJ", "E", "F", "G"):
        raise ConfigError(f"unknown family {family!r}")
    K = len(m_seq)
    q_seq = list(q_seq) if q_seq is not None else [1] * K
    selectors = list(selectors) if selectors is not None else [None] * K
    if len(a_seq) < K or len(q_seq) < K or len(selectors) < K:
        raise ConfigError("a_seq, q_seq and selectors must cover every level")
    C = Construction(family, (), dict(provenance or {}))
    for k in range(1, K + 1):
        C = extend(C, m_seq[k - 1], a_seq[k - 1], q_seq[k - 1], selectors[k - 1], precision=precision,
                   enum_cap=enum_cap, sieve_ceiling=sieve_ceiling)
    return C


def extend(C: Construction, m: int, a_k, q: int, selector=None, *, precision: int = DEFAULT_PRECISION,
           enum_cap: int = ENUM_CAP, sieve_ceiling: int | None = None) -> Construction:
    """Append one level; i_k is the least admissible count over union-tree (or superset) parents."""
    family, k = C.family, C.depth + 1
    m, q, a_k = int(m), int(q), Q(a_k)
    if C.depth and m <= C.levels[-1].m:
        raise ConfigError(f"level {k}: m_k must exceed m_(k-1)")
    if family == "G" and C.depth and m % C.levels[-1].m:
        raise ConfigError(f"level {k}: family G needs m_(k-1) | m_k")
    if q < 1 or q >= m and family != "EJ":
        raise ConfigError(f"level {k}: need 1 <= q_k < m_k")
    if family in PROGRESSION:
        _check_selector(family, q, (), selector)
    union = C.union_tree()
    if family in PROGRESSION:
        if family == "G":
            # every parent is [r/m', (r+1)/m'] (or [0,1]), so the count is the same for all of them
            parents = [ROOT_NODE] if k == 1 else [union.node_at(k - 1, 0)]
        else:
            parents = _maybe_enumerate(union, k - 1, enum_cap)
        parent_len = C.levels[-1].rad_lo * 2 if C.depth else mpq(1)
        L = _prog_level(family, k, m, a_k, q, selector, parents, parent_len, precision)
    else:
        branch_only = False
        if family == "F":
            parents = _superset_parents(C, enum_cap) if k > 1 else [ROOT_NODE]
            if parents is None:
                # superset over all H choices is out of reach: equalize over the selected branch
                parents = _maybe_enumerate(C, k - 1, enum_cap)
                branch_only = parents is not None
        else:
            parents = _maybe_enumerate(C, k - 1, enum_cap)
        parent_len = 2 * C.levels[-1].rad_lo if C.depth else mpq(1)
        L = _prime_level(family, k, m, a_k, q, selector, parents, parent_len, precision, sieve_ceiling)
        if branch_only and L.i_k_method == "exact":
            L = replace(L, i_k_method="exact over the selected branch")
        if family == "F" and selector is not None:
            _check_selector(family, q, L.pool, tuple(selector))
    return replace(C, levels=C.levels + (L,))


def _maybe_enumerate(C: Construction, k: int, cap: int):
    if C.count(k) > cap:
        return None
    return C.enumerate_level(k, cap)


def _superset_parents(C: Construction, cap: int):
    """Level-(k-1) intervals over every admissible choice of H_1..H_(k-1), when small enough.

    Only level 1 is handled exactly (the superset is G_p(a_1) over the whole
    pool); deeper levels fall back to the analytic bound.
    """
    if C.depth != 1:
        return None
    L = C.levels[0]
    out = []
    for p in L.pool:
        rlo, rhi = radius_bounds(p, L.a_k)
        r0, r1 = _prime_r_range(ROOT_NODE, p, L.a_k)
        out += [Node(mpq(r, p) - rlo, mpq(r, p) + rlo, mpq(r, p), rlo, rhi) for r in range(r0, r1 + 1)]
        if len(out) > cap:
            return None
    return out


# ------------------------------------------------------------------- checks


def min_sibling_gap(C: Construction, k: int, cap: int = ENUM_CAP) -> Optional[Rational]:
    """Least gap between kept children of a common parent, radii enlarged to rad_hi."""
    best = None
    for P in C.enumerate_level(k - 1, cap):
        kids = C.children(k, P)
        for x, y in zip(kids, kids[1:]):
            a = Interval(x.center - x.rad_hi, x.center + x.rad_hi) if C.family != "G" else x.interval
            b = Interval(y.center - y.rad_hi, y.center + y.rad_hi) if C.family != "G" else y.interval
            g = gap(a, b)
            best = g if best is None or g < best else best
    return best


def selector_space(L: LevelSpec) -> list:
    """All selector values for a level: residues 0..q-1, or q-subsets of the prime pool."""
    if L.progression:
        return list(range(L.q))
    if L.family == "F":
        return [tuple(c) for c in combinations(L.pool, L.q)]
    return [None]


def fanout_lower_bound_holds(C: Construction, k: int) -> bool:
    """i_k >= m_k / (m_(k-1)^(a_(k-1)) q_k), checked exactly."""
    if k < 2:
        return True
    L, P = C.level(k), C.level(k - 1)
    # i_k * m_(k-1)^(a_(k-1)) * q_k >= m_k
    return compare_product([(P.m, P.a_k), (L.i_k * L.q, 1)], L.m) >= 0
