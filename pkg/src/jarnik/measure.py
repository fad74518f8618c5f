"""Exact uniform-measure queries, mass-distribution sweeps, covering sums and B-sets.

mu(C, I, k) counts the level-k intervals that meet the closed interval I and
multiplies by the unit mass 1/(i_1...i_k).  Since the measure lives inside
the level-k intervals this is an upper bound on the true measure of I, and it
is the quantity every certificate below uses.
"""
from __future__ import annotations

import bisect
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

import gmpy2
from gmpy2 import mpq, mpz

from .errors import ConfigError, JarnikError
from .exact import (DEFAULT_PRECISION, Interval, Q, Rational, ceil_q, compare_product, floor_q, fmt,
                    merge_intervals, pow_enclosure)
from .families import ROOT_NODE, Construction, Node, build_construction

# ------------------------------------------------------------------ counting


@dataclass
class LevelTrace:
    level: int
    full: int = 0  # descendants contributed by nodes fully inside the query set
    partial: int = 0  # boundary nodes carried to the next level


def _components(intervals: Sequence[Interval]) -> list[Interval]:
    return merge_intervals(intervals)


def _classify(node: Node, comps: list[Interval], los: list) -> int:
    """2 if the node lies inside one component, 1 if it meets some component, 0 otherwise."""
    j = bisect.bisect_right(los, node.hi) - 1
    if j < 0:
        return 0
    c = comps[j]
    if c.lo <= node.lo and node.hi <= c.hi:
        return 2
    if c.hi >= node.lo:
        return 1
    return 0


def count_meeting_union(C: Construction, comps: Sequence[Interval], k: int,
                        trace: Optional[list] = None) -> int:
    """Number of level-k intervals of C meeting the union of ``comps`` (closed intervals).

    Parents inside one component contribute all their descendants at once;
    only nodes straddling a component boundary are refined.
    """
    if k > C.depth:
        raise ValueError(f"construction has {C.depth} levels, asked for level {k}")
    comps = _components(comps)
    if not comps:
        return 0
    los = [c.lo for c in comps]
    below = [1] * (k + 2)  # below[j] = descendants at level k of one level-j node
    for j in range(k - 1, -1, -1):
        below[j] = below[j + 1] * C.level(j + 1).fanout
    state = _classify(ROOT_NODE, comps, los)
    if state == 0:
        return 0
    if state == 2:
        if trace is not None:
            trace.append(LevelTrace(0, below[0], 0))
        return below[0]
    total, frontier = 0, [ROOT_NODE]
    for j in range(1, k + 1):
        lt = LevelTrace(j)
        nxt = []
        for P in frontier:
            lo_i = max(0, bisect.bisect_right(los, P.lo) - 1)
            hi_i = bisect.bisect_right(los, P.hi)
            mine = {}  # dedupe per parent only: overlapping parents may share equal child intervals
            for c in comps[lo_i:hi_i]:
                if c.hi < P.lo:
                    continue
                inside, partial = C.children_meeting(j, P, c)
                lt.full += inside * below[j]
                for ch in partial:
                    mine[ch] = None
            nxt += sorted(mine)
        frontier = []
        for ch in nxt:
            s = _classify(ch, comps, los)
            if s == 2:
                lt.full += below[j]
            elif s == 1:
                frontier.append(ch)
        if j == k:
            lt.full += len(frontier)
            lt.partial = 0
            frontier = []
        else:
            lt.partial = len(frontier)
        total += lt.full
        if trace is not None:
            trace.append(lt)
        if not frontier:
            break
    return total


def count_meeting(C: Construction, I: Interval, k: int, trace: Optional[list] = None) -> int:
    return count_meeting_union(C, [I], k, trace)


@dataclass
class MeasureReport:
    interval: Interval
    k: int
    value: Rational
    unit: Rational
    trace: list = field(default_factory=list)

    def recompute(self) -> Rational:
        return sum((t.full for t in self.trace), 0) * self.unit

    def to_record(self) -> dict:
        return {"kind": "measure", "interval": [fmt(self.interval.lo), fmt(self.interval.hi)], "k": self.k,
                "mu": fmt(self.value),
                "trace": [{"level": t.level, "full": mpz(t.full).digits(10), "partial": t.partial} for t in self.trace]}


def mu(C: Construction, I: Interval, k: int) -> Rational:
    return count_meeting(C, I, k) * C.mass(k)


def mu_report(C: Construction, I: Interval, k: int) -> MeasureReport:
    trace: list = []
    n = count_meeting(C, I, k, trace)
    return MeasureReport(I, k, n * C.mass(k), C.mass(k), trace)


def mu_enumerated(C: Construction, I: Interval, k: int) -> Rational:
    """Brute-force oracle: scan every enumerated level-k interval."""
    n = sum(1 for node in C.enumerate_level(k) if node.lo <= I.hi and I.lo <= node.hi)
    return n * C.mass(k)


def count_meeting_enumerated(C: Construction, comps: Sequence[Interval], k: int) -> int:
    comps = list(comps)
    return sum(1 for node in C.enumerate_level(k) if any(node.lo <= c.hi and c.lo <= node.hi for c in comps))


# ----------------------------------------------------- mass distribution sweep


def gap_bound(C: Construction, j: int) -> Rational:
    """Minimum gap between kept level-j intervals of a common parent (selector reading)."""
    L = C.level(j)
    if L.family == "G":
        return mpq(L.q - 1, L.m)
    if L.family == "E":
        return mpq(L.q, L.m) - 2 * L.rad_hi
    return mpq(1, 4 * L.m * L.m) - 2 * L.rad_hi


def scale_window(C: Construction, k: int) -> tuple[Rational, Rational]:
    """[lo, hi) range of |I| in which the level-k bound mu(I) < |I|^b_k is claimed."""
    if not 2 <= k <= C.depth:
        raise ValueError("scale windows exist for 2 <= k <= depth")
    return gap_bound(C, k), gap_bound(C, k - 1)


@dataclass
class SweepRow:
    k: int
    label: str
    interval: Interval
    mu: Optional[Rational]
    b_k: Rational
    status: str  # pass | fail | skipped
    reason: str = ""

    @property
    def length(self) -> Rational:
        return self.interval.length

    def to_row(self) -> dict:
        return {"level": self.k, "label": self.label, "lo": fmt(self.interval.lo), "hi": fmt(self.interval.hi),
                "length": fmt(self.length), "mu": "" if self.mu is None else fmt(self.mu),
                "b_k": fmt(self.b_k), "status": self.status, "reason": self.reason}


def _log2_floor(x: Rational) -> int:
    """floor(log2 x) for rational x > 0."""
    x = mpq(x)
    e = int(x.numerator.bit_length()) - int(x.denominator.bit_length())
    while mpq(2) ** e > x:
        e -= 1
    while mpq(2) ** (e + 1) <= x:
        e += 1
    return e


def dyadic_test_intervals(C: Construction, k: int, *, scales: int = 8, anchors: int = 4,
                          seed: int = 0) -> list[tuple[str, Interval]]:
    """Dyadic intervals at sampled in-window scales, anchored on level-(k-1) centers, plus
    the level-(k-1) interval itself (the extreme case of the counting argument)."""
    lo_len, hi_len = scale_window(C, k)
    rng = random.Random(seed * 1_000_003 + k)
    out: list[tuple[str, Interval]] = []
    n_prev = C.count(k - 1)
    picks = [0, n_prev - 1] + [rng.randrange(n_prev) for _ in range(max(0, anchors - 2))]
    nodes = [C.node_at(k - 1, i) if k > 1 else ROOT_NODE for i in picks]
    if hi_len > 0 and lo_len > 0:
        e_min = -_log2_floor(hi_len)  # 2^-e_min <= hi_len, bump if equal (window is half-open)
        if mpq(2) ** (-e_min) >= hi_len:
            e_min += 1
        e_max = -_log2_floor(lo_len)
        if mpq(2) ** (-e_max) < lo_len:
            e_max -= 1
        if e_min <= e_max:
            span = e_max - e_min
            es = sorted({e_min + (span * t) // max(1, scales - 1) for t in range(scales)})
            for e in es:
                w = mpq(1, mpz(2) ** e)
                for idx, node in zip(picks, nodes):
                    j = int(floor_q(node.center / w))
                    for jj in (j - 1, j):
                        if jj >= 0:
                            out.append((f"dyadic e={e} node={idx}", Interval(jj * w, (jj + 1) * w)))
                jr = rng.randrange(mpz(2) ** e) if e < 4096 else 0
                out.append((f"dyadic e={e} random", Interval(jr * w, (jr + 1) * w)))
    for idx, node in zip(picks, nodes):
        out.append((f"level-{k - 1} interval node={idx}", node.interval))
    return out


def check_mass_bound(mu_value: Rational, length: Rational, b_k) -> bool:
    """mu < length^b_k exactly, via mu^v < length^u with b_k = u/v."""
    if mu_value == 0:
        return True
    b_k = mpq(b_k)
    return compare_product([(mu_value, 1), (length, -b_k)], 1) < 0


def verify_mass_distribution(C: Construction, k: int, tests: Sequence[tuple[str, Interval]], b_seq: Sequence,
                             *, eval_depth: Optional[int] = None) -> list[SweepRow]:
    """Check mu(I) < |I|^b_k for each in-window test interval; others are skipped, not passed."""
    b_k = Q(b_seq[k - 1])
    lo_len, hi_len = scale_window(C, k)
    depth = eval_depth or C.depth
    rows = []
    for label, I in tests:
        L = I.length
        if not (lo_len <= L < hi_len):
            rows.append(SweepRow(k, label, I, None, b_k, "skipped", "length outside the scale window"))
            continue
        m = mu(C, I, depth)
        ok = check_mass_bound(m, L, b_k)
        rows.append(SweepRow(k, label, I, m, b_k, "pass" if ok else "fail",
                             "" if ok else f"mu={fmt(m)} not below |I|^{fmt(b_k)}"))
    return rows


def sweep(C: Construction, b_seq: Sequence, *, levels: Optional[Sequence[int]] = None, scales: int = 8,
          anchors: int = 4, seed: int = 0) -> list[SweepRow]:
    rows = []
    for k in levels or range(2, C.depth + 1):
        rows += verify_mass_distribution(C, k, dyadic_test_intervals(C, k, scales=scales, anchors=anchors,
                                                                     seed=seed), b_seq)
    return rows


def rebuild_with_q(C: Construction, level: int, q: int, *, precision: int = DEFAULT_PRECISION) -> Construction:
    qs = [L.q for L in C.levels]
    qs[level - 1] = q
    sels = [L.selector for L in C.levels]
    if C.family in ("E", "G") and sels[level - 1] is not None:
        sels[level - 1] = sels[level - 1] % q
    return build_construction(C.family, [L.m for L in C.levels], [L.a_k for L in C.levels], qs, sels,
                              precision=precision, provenance=dict(C.provenance, mutated_level=level))


@dataclass
class MutationResult:
    level: int
    factor: Optional[int]  # q multiplier at the first failure, None if none found
    failures: list


def mutation_search(C: Construction, level: int, b_seq: Sequence, *, max_doublings: int = 256,
                    seed: int = 0, scales: int = 3, anchors: int = 2) -> MutationResult:
    """Least t such that q_level * 2^t (1/q_level halved t times) makes the level+1 sweep fail.

    t is found by galloping then bisection; failure is monotone in t because each doubling
    halves i_level and so doubles every level-(level+1) measure.
    """
    q0, m = C.level(level).q, C.level(level).m
    memo: dict = {}

    def fails(t):
        if t not in memo:
            q = q0 << t
            if q >= m:
                memo[t] = None
                return None
            try:
                M = rebuild_with_q(C, level, q)
            except JarnikError:  # the mutated level no longer builds (starved)
                memo[t] = None
                return None
            rows = sweep(M, b_seq, levels=[level + 1], seed=seed, scales=scales, anchors=anchors)
            memo[t] = [r for r in rows if r.status == "fail"]
        return memo[t]

    lo, t = 0, 1
    while t <= max_doublings:
        f = fails(t)
        if f is None:
            break
        if f:
            while t - lo > 1:
                mid = (lo + t) // 2
                g = fails(mid)
                if g:
                    t = mid
                else:
                    lo = mid
            return MutationResult(level, 1 << t, memo[t])
        lo, t = t, 2 * t
    return MutationResult(level, None, [])


# ------------------------------------------------------------- covering sums


@dataclass
class CoveringSum:
    k: int
    beta: Rational
    count: int
    length_hi: Rational  # upper bound on the length of one level-k interval
    value_lo: Rational
    value_hi: Rational


def _interval_length_hi(C: Construction, k: int) -> Rational:
    L = C.level(k)
    return mpq(1, L.m) if L.family == "G" else 2 * L.rad_hi


def covering_sum(C: Construction, k: int, beta, precision: int = DEFAULT_PRECISION) -> CoveringSum:
    """N_k * (length bound)^beta as an enclosure (all level-k intervals use the largest radius)."""
    beta = Q(beta)
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    N = C.count(k)
    ell = _interval_length_hi(C, k)
    lo, hi = pow_enclosure(ell, beta, precision)
    return CoveringSum(k, beta, N, ell, N * lo, N * hi)


def covering_sum_decreases(C: Construction, k: int, beta) -> bool:
    """N_k (2 m_k^-a_k)^beta < N_(k-1) (2 m_(k-1)^-a_(k-1))^beta, exactly (level 0 is [0,1])."""
    beta = Q(beta)
    L = C.level(k)
    fac = [(C.count(k), 1), (L.m, -L.a_k * beta)]
    if k > 1:
        P = C.level(k - 1)
        fac += [(C.count(k - 1), -1), (P.m, P.a_k * beta)]
    else:
        fac += [(2, beta)]
    if L.family == "G":  # lengths are 1/m exactly
        fac = [(C.count(k), 1), (L.m, -beta)] + ([(C.count(k - 1), -1), (C.level(k - 1).m, beta)] if k > 1 else [])
    return compare_product(fac, 1) < 0


def covering_sum_closed_form_holds(C: Construction, k: int, beta, b_k2) -> bool:
    """N_k (2 m_k^-a_k)^beta <= 2^beta m_k^-(beta - b_(k+2)), i.e. N_k <= m_k^(a_k beta + b_(k+2) - beta)."""
    beta, b_k2 = Q(beta), Q(b_k2)
    L = C.level(k)
    return compare_product([(L.m, L.a_k * beta + b_k2 - beta)], C.count(k)) >= 0


# ------------------------------------------------------------------- B-sets


@dataclass(frozen=True)
class BSetSpec:
    d1: int
    d2: Optional[int]  # None means infinity
    a_star: Rational

    def __post_init__(self):
        if self.d1 < 2:
            raise ConfigError("B-sets need d1 >= 2")
        object.__setattr__(self, "a_star", Q(self.a_star))

    @property
    def finite(self) -> bool:
        return self.d2 is not None

    def count(self) -> int:
        """Number of (p, q) pairs before clipping."""
        if not self.finite:
            raise ValueError("infinite B-set has no finite count; use tail_sum_bound")
        if self.d2 < self.d1:
            return 0
        f = lambda d: d * (d + 3) // 2  # sum_{q=1..d} (q + 1)
        return f(self.d2) - f(self.d1 - 1)


@dataclass(frozen=True)
class BInterval:
    p: int
    q: int
    interval: Interval  # clipped to [0, 1], radius rounded outward


def b_set_enumerate(spec: BSetSpec, precision: int = DEFAULT_PRECISION) -> list[BInterval]:
    if not spec.finite:
        raise ValueError("d2 = infinity: use tail_sum_bound for the tail")
    out = []
    zero, one = mpq(0), mpq(1)
    for q in range(spec.d1, spec.d2 + 1):
        _, r = pow_enclosure(q, -spec.a_star, precision)
        for p in range(q + 1):
            c = mpq(p, q)
            out.append(BInterval(p, q, Interval(max(zero, c - r), min(one, c + r))))
    return out


def b_set_endpoints(bset: Sequence[BInterval]) -> list[Interval]:
    pts = sorted({x for b in bset for x in (b.interval.lo, b.interval.hi)})
    return [Interval(x, x) for x in pts]


def b_set_cover_measure(C: Construction, level: int, spec_or_intervals, mass_tree: Optional[Construction] = None,
                        precision: int = DEFAULT_PRECISION) -> Rational:
    """mu_J of the level-``level`` intervals of C (a branch-selected tree) that meet the B-set.

    The unit mass comes from ``mass_tree`` (the union tree J) when given.
    """
    if isinstance(spec_or_intervals, BSetSpec):
        if spec_or_intervals.finite and spec_or_intervals.d2 < spec_or_intervals.d1:
            return mpq(0)
        comps = [b.interval for b in b_set_enumerate(spec_or_intervals, precision)]
    else:
        comps = list(spec_or_intervals)
    unit = (mass_tree or C).mass(level)
    return count_meeting_union(C, comps, level) * unit


# ----------------------------------------------------------------- tail sums

TAIL_WIDTH = mpq(1, 1 << 20)


def _round_down(x: Rational, bits: int) -> Rational:
    s = mpz(1) << bits
    return mpq(floor_q(x * s), s)


def _round_up(x: Rational, bits: int) -> Rational:
    s = mpz(1) << bits
    return mpq(ceil_q(x * s), s)


def _integral_tail(x, alpha_bar, c, precision):
    """Enclosure of int_x^inf c t^(1 - alpha_bar) dt = c x^(2 - alpha_bar)/(alpha_bar - 2)."""
    lo, hi = pow_enclosure(x, 2 - alpha_bar, precision)
    return c[0] * lo / (alpha_bar - 2), c[1] * hi / (alpha_bar - 2)


def tail_sum_bound(d: int, alpha_bar, width=TAIL_WIDTH, precision: int = 96) -> tuple[Rational, Rational]:
    """Enclosure of sum_{j>=d} j/(2j)^alpha_bar.

    Partial sum over d <= j < n with directed-rounded terms, then a tail bracket
    valid for the convex decreasing summand f(t) = 2^-alpha_bar t^(1-alpha_bar):
    int_n^inf f + f(n)/2 <= sum_{j>=n} f(j) <= int_{n-1/2}^inf f.
    n doubles until the enclosure is narrower than ``width``.
    """
    alpha_bar = Q(alpha_bar)
    if alpha_bar <= 2:
        raise ValueError("the tail sum diverges for alpha_bar <= 2")
    if d < 1:
        raise ValueError("d must be >= 1")
    width = Q(width)
    c = pow_enclosure(2, -alpha_bar, precision)
    bits = precision + 8

    def term(j):
        lo, hi = pow_enclosure(j, 1 - alpha_bar, precision)
        return _round_down(c[0] * lo, bits), _round_up(c[1] * hi, bits)

    part_lo = part_hi = mpq(0)
    j, n = d, d
    while True:
        while j < n:
            t = term(j)
            part_lo += t[0]
            part_hi += t[1]
            j += 1
        f_n = term(n)
        tail_lo = _integral_tail(n, alpha_bar, c, precision)[0] + f_n[0] / 2
        tail_hi = _integral_tail(mpq(2 * n - 1, 2), alpha_bar, c, precision)[1]
        lo, hi = part_lo + tail_lo, part_hi + tail_hi
        if hi - lo <= width:
            return lo, hi
        n *= 2


def d_gap_ok(d: int, alpha_bar, gap) -> bool:
    """2 / d^alpha_bar < gap, exactly."""
    if gap is None:
        return True
    if gap <= 0:
        return False
    return compare_product([(2, 1), (d, -Q(alpha_bar))], gap) < 0


def choose_d(budget, alpha_bar, *, start: int = 1, gap=None) -> int:
    """Least d >= start with tail_sum_bound(d).upper < budget and (if given) 2/d^alpha_bar < gap.

    Both conditions are monotone in d, so a galloping search followed by bisection finds the least d.
    """
    budget = Q(budget)
    ok = lambda d: tail_sum_bound(d, alpha_bar)[1] < budget and d_gap_ok(d, alpha_bar, gap)
    if ok(start):
        return start
    lo, step = start, 1  # ok(lo) is False
    while not ok(lo + step):
        lo += step
        step *= 2
    hi = lo + step
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi
