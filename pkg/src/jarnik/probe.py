"""Sampling from the uniform measure and irrationality-exponent probes with trust radii."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from gmpy2 import mpq, mpz

from .exact import Rational, fmt, ln_enclosure
from .families import ROOT_NODE, Construction, Node

LN_BITS = 64


@dataclass(frozen=True)
class SamplePoint:
    seed: int
    chain: tuple  # Node per level 1..K
    representative: Rational
    trust_radius: Rational
    indices: tuple = ()  # child position chosen at each level

    def nested(self) -> bool:
        outer = None
        for node in self.chain:
            if outer is not None and not (outer.lo <= node.lo and node.hi <= outer.hi):
                return False
            outer = node
        return all(n.lo <= self.representative <= n.hi for n in self.chain)


def derive_seeds(seed: int, n: int) -> list[int]:
    """Independent 64-bit per-sample seeds from one base seed (numpy SeedSequence spawning)."""
    out = []
    for child in np.random.SeedSequence(int(seed)).spawn(n):
        hi, lo = (int(x) for x in child.generate_state(2, dtype=np.uint32))
        out.append((hi << 32) | lo)
    return out


def sample_point(C: Construction, K: int, seed: int) -> SamplePoint:
    """Walk K levels choosing a uniformly random child at each; deterministic for a fixed seed."""
    if K > C.depth:
        raise ValueError(f"construction has only {C.depth} levels")
    rng = random.Random(seed)
    chain, picks, node = [], [], ROOT_NODE
    for k in range(1, K + 1):
        j = rng.randrange(C.level(k).fanout)
        node = C.child_at(k, node, j)
        chain.append(node)
        picks.append(j)
    return SamplePoint(seed, tuple(chain), node.center, (node.hi - node.lo) / 2, tuple(picks))


# ------------------------------------------------------- continued fractions


def cf_convergents(x, max_terms: Optional[int] = None) -> tuple[list[int], list[tuple[int, int]]]:
    """Partial quotients and convergents (p_n, q_n) of a rational x by the Euclidean algorithm."""
    x = mpq(x)
    n, d = int(x.numerator), int(x.denominator)
    quotients, convs = [], []
    p0, q0, p1, q1 = 1, 0, 0, 1  # p_{-1}, q_{-1}, p_{-2}, q_{-2}
    while d:
        a, r = divmod(n, d)
        quotients.append(a)
        p0, p1 = a * p0 + p1, p0
        q0, q1 = a * q0 + q1, q0
        convs.append((p0, q0))
        n, d = d, r
        if max_terms is not None and len(convs) >= max_terms:
            break
    return quotients, convs


# -------------------------------------------------------------------- probes


def _ratio_enclosure(num: Rational, base: int) -> tuple[Rational, Rational]:
    """Enclosure of ln(num)/ln(base) for num > 1, base >= 2."""
    nl, nh = ln_enclosure(num, LN_BITS)
    bl, bh = ln_enclosure(base, LN_BITS)
    lo = nl / bh if nl >= 0 else nl / bl
    hi = nh / bl if nh >= 0 else nh / bh
    return lo, hi


@dataclass
class ConvergentStat:
    p: int
    q: int
    distance: Rational
    z: Optional[tuple]  # (lo, hi) enclosure of ln(1/distance)/ln(q); None when q = 1 or distance = 0
    trusted: bool
    exact_hit: bool = False


@dataclass
class LevelStat:
    level: int
    m: int
    delta: Rational
    radius: Rational
    contained: bool  # delta <= radius, exactly
    zeta: Optional[tuple]
    exact_hit: bool


@dataclass
class ProbeResult:
    seed: int
    representative: Rational
    trust_radius: Rational
    convergents: list = field(default_factory=list)
    levels: list = field(default_factory=list)

    @property
    def trusted_count(self) -> int:
        return sum(1 for c in self.convergents if c.trusted)


def trusted(x: Rational, r: Rational, p: int, q: int) -> bool:
    """p/q is a convergent of every real within r of x: |x - p/q| + r < 1/(2q^2) (Legendre)."""
    return abs(x - mpq(p, q)) + r < mpq(1, 2 * q * q)


def probe_convergents(x: Rational, trust_radius: Rational, max_terms: Optional[int] = None) -> list:
    _, convs = cf_convergents(x, max_terms)
    out = []
    for p, q in convs:
        dist = abs(x - mpq(p, q))
        hit = dist == 0
        z = None
        if not hit and q >= 2:
            z = _ratio_enclosure(1 / dist, q)
        out.append(ConvergentStat(p, q, dist, z, trusted(x, trust_radius, p, q), hit))
    return out


def _approximant(C: Construction, node: Node) -> Rational:
    # the construction's own rationals p/m_k: centers, or left endpoints for the interval family G
    return node.lo if C.family == "G" else node.center


def exponent_estimate(sample: SamplePoint, C: Construction, max_terms: Optional[int] = None) -> ProbeResult:
    if len(sample.chain) < 2:
        raise ValueError("probes need depth >= 2")
    x = sample.representative
    res = ProbeResult(sample.seed, x, sample.trust_radius)
    for k, node in enumerate(sample.chain[:-1], 1):
        L = C.level(k)
        delta = abs(x - _approximant(C, node))
        radius = node.hi - node.center if C.family != "G" else node.hi - node.lo
        zeta = None if delta == 0 else _ratio_enclosure(1 / delta, L.m)
        res.levels.append(LevelStat(k, L.m, delta, radius, delta <= radius, zeta, delta == 0))
    res.convergents = probe_convergents(x, sample.trust_radius, max_terms)
    return res


def probe_batch(C: Construction, K: int, n: int, seed: int, max_terms: Optional[int] = None) -> list[ProbeResult]:
    return [exponent_estimate(sample_point(C, K, s), C, max_terms) for s in derive_seeds(seed, n)]


INLINE_BITS = 4096  # longer fractions are summarized by floor(log2 |x|) in CSV rows


def _short(x: Rational) -> str:
    x = mpq(x)
    if x.numerator.bit_length() + x.denominator.bit_length() <= INLINE_BITS:
        return fmt(x)
    return ""


def log2_floor(x: Rational) -> int:
    x = abs(mpq(x))
    e = int(x.numerator.bit_length()) - int(x.denominator.bit_length())
    return e if mpq(2) ** e <= x else e - 1


def sample_rows(samples: list[SamplePoint]) -> list[dict]:
    return [{"seed": str(s.seed), "indices": ".".join(mpz(j).digits(10) for j in s.indices),
             "representative": _short(s.representative),
             "trust_radius_log2_floor": log2_floor(s.trust_radius), "nested": s.nested()} for s in samples]


def probe_rows(results: list[ProbeResult]) -> list[dict]:
    rows = []
    for r in results:
        for lv in r.levels:
            rows.append({"seed": str(r.seed), "level": lv.level, "delta": _short(lv.delta),
                         "delta_log2_floor": "" if lv.delta == 0 else log2_floor(lv.delta),
                         "contained": lv.contained,
                         "zeta_lo": "" if lv.zeta is None else fmt(lv.zeta[0]),
                         "zeta_hi": "" if lv.zeta is None else fmt(lv.zeta[1]),
                         "exact_hit": lv.exact_hit, "trusted_convergents": r.trusted_count})
    return rows


def fibonacci(n: int) -> int:
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def fibonacci_control(n: int = 20) -> list[ConvergentStat]:
    """Convergent statistics of F_n/F_(n+1), an exact rational with zero trust radius."""
    return probe_convergents(mpq(fibonacci(n), fibonacci(n + 1)), mpq(0))
