"""Exact arithmetic substrate.

Rationals are GMP rationals (``gmpy2.mpq``); every comparison on the
verification path is exact.  Irrational quantities such as ``p**(-5/2)`` or
``ln m`` are handled through directed rational bounds.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import gmpy2
import numpy as np
from gmpy2 import mpq, mpz

from .errors import CapacityError

Rational = type(mpq(0))

DEFAULT_PRECISION = 64
DEFAULT_SIEVE_CEILING = 10**7
SIEVE_ENV = "JARNIK_SIEVE_CEILING"


def Q(x, den=None) -> Rational:
    """Coerce ints, Fractions, mpq and fraction strings ("3/4", "7") to mpq."""
    if den is not None:
        return mpq(x, den)
    if isinstance(x, str):
        x = x.strip()
        if not x:
            raise ValueError("empty fraction string")
        return mpq(x)
    if isinstance(x, float):
        raise TypeError("floats are not accepted as exact rationals")
    return mpq(x)


def floor_q(x) -> mpz:
    x = mpq(x)
    return x.numerator // x.denominator


def ceil_q(x) -> mpz:
    x = mpq(x)
    return -((-x.numerator) // x.denominator)


def fmt(x) -> str:
    """Lossless decimal fraction string."""
    x = mpq(x)
    if x.denominator == 1:
        return x.numerator.digits(10)
    return f"{x.numerator.digits(10)}/{x.denominator.digits(10)}"


def is_power_of_two(n) -> bool:
    n = mpz(n)
    return n > 0 and (n & (n - 1)) == 0


def log2_exact(n) -> int:
    if not is_power_of_two(n):
        raise ValueError(f"{n} is not a power of two")
    return int(mpz(n).bit_length() - 1)


# ---------------------------------------------------------------- intervals


@dataclass(frozen=True, order=True)
class Interval:
    lo: Rational
    hi: Rational

    def __post_init__(self):
        object.__setattr__(self, "lo", mpq(self.lo))
        object.__setattr__(self, "hi", mpq(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def length(self) -> Rational:
        return self.hi - self.lo

    def meets(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def contains(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def contains_point(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __str__(self):
        return f"[{fmt(self.lo)}, {fmt(self.hi)}]"


def gap(I: Interval, J: Interval) -> Rational:
    """Distance between two disjoint closed intervals (0 when they touch)."""
    if I.hi <= J.lo:
        return J.lo - I.hi
    if J.hi <= I.lo:
        return I.lo - J.hi
    raise ValueError(f"intervals {I} and {J} overlap")


def merge_intervals(intervals: Iterable[Interval]) -> list[Interval]:
    """Union of closed intervals as sorted disjoint components (touching ones merge)."""
    out: list[Interval] = []
    for iv in sorted(intervals):
        if out and iv.lo <= out[-1].hi:
            if iv.hi > out[-1].hi:
                out[-1] = Interval(out[-1].lo, iv.hi)
        else:
            out.append(iv)
    return out


# ---------------------------------------------------------- directed powers


@dataclass(frozen=True)
class DirectedBound:
    value: Rational
    direction: str
    base: int
    exponent: Rational
    relative_error_bound: Rational

    @property
    def exact(self) -> bool:
        return self.relative_error_bound == 0


def _root_bracket(num: mpz, den: mpz, v: int, precision: int):
    """Return (lo, hi, exact) with lo <= (num/den)**(1/v) <= hi and hi/lo <= 1 + 2**-precision."""
    if v == 1:
        x = mpq(num, den)
        return x, x, True
    rn, en = gmpy2.iroot(num, v)
    rd, ed = gmpy2.iroot(den, v)
    if en and ed:
        x = mpq(rn, rd)
        return x, x, True
    # floor((num/den)**(1/v) * 2**s) = iroot(floor(num * 2**(s v) / den), v)
    est = (int(num.bit_length()) - int(den.bit_length())) // v
    s = max(0, precision + 2 - est)
    while True:
        r, exact = gmpy2.iroot((num << (s * v)) // den, v)
        if r >= (mpz(1) << precision):
            break
        s += precision
    lo = mpq(r, mpz(1) << s)
    hi = mpq(r + 1, mpz(1) << s)
    return lo, hi, False


def pow_enclosure(base, e, precision: int = DEFAULT_PRECISION):
    """Rational (lo, hi) enclosing base**e for rational base > 0 and rational e."""
    base = mpq(base)
    e = mpq(e)
    if base <= 0:
        raise ValueError("base must be positive")
    u, v = int(e.numerator), int(e.denominator)
    if u < 0:
        base = 1 / base
        u = -u
    num = base.numerator**u
    den = base.denominator**u
    lo, hi, _ = _root_bracket(num, den, v, precision)
    return lo, hi


def pow_bound(p: int, e, precision: int = DEFAULT_PRECISION, direction: str = "lower") -> DirectedBound:
    if p < 2:
        raise ValueError(f"pow_bound needs p >= 2, got {p}")
    if precision < 8:
        raise ValueError(f"precision must be >= 8 bits, got {precision}")
    if direction not in ("lower", "upper"):
        raise ValueError(f"direction must be 'lower' or 'upper', not {direction!r}")
    e = mpq(e)
    u, v = int(e.numerator), int(e.denominator)
    base = mpq(p) if u >= 0 else mpq(1, p)
    num, den = base.numerator ** abs(u), base.denominator ** abs(u)
    lo, hi, exact = _root_bracket(num, den, v, precision)
    value = lo if direction == "lower" else hi
    err = mpq(0) if exact else mpq(1, mpz(1) << precision)
    return DirectedBound(value, direction, int(p), e, err)


@lru_cache(maxsize=65536)
def radius_bounds(p: int, a, precision: int = DEFAULT_PRECISION) -> tuple[Rational, Rational]:
    """(lower, upper) bounds on p**(-a)."""
    lo = pow_bound(p, -mpq(a), precision, "lower").value
    hi = pow_bound(p, -mpq(a), precision, "upper").value
    return lo, hi


def compare_product(factors: Sequence[tuple], rhs) -> int:
    """Sign of prod(base_i ** e_i) - rhs, exactly; bases and rhs positive rationals."""
    rhs = mpq(rhs)
    sign = _log_prefilter(factors, rhs)
    if sign:
        return sign
    V = 1
    for _, e in factors:
        V = V * int(mpq(e).denominator) // gmpy2.gcd(V, int(mpq(e).denominator))
    num, den = mpz(1), mpz(1)
    for base, e in factors:
        n = int(mpq(e) * V)
        base = mpq(base)
        if n >= 0:
            num *= base.numerator**n
            den *= base.denominator**n
        else:
            num *= base.denominator ** (-n)
            den *= base.numerator ** (-n)
    lhs_n, lhs_d = num, den
    r_n, r_d = rhs.numerator**V, rhs.denominator**V
    a, b = lhs_n * r_d, r_n * lhs_d
    return (a > b) - (a < b)


def _log_prefilter(factors, rhs) -> int:
    # 128-bit log2 estimate with a generous error budget; 0 means "too close, do it exactly"
    with gmpy2.context(gmpy2.get_context(), precision=128):
        total, budget = gmpy2.mpfr(0), gmpy2.mpfr(2)
        for base, e in list(factors) + [(rhs, -1)]:
            base, e = mpq(base), mpq(e)
            if e == 0:
                continue
            l_n = gmpy2.log2(gmpy2.mpfr(base.numerator))
            l_d = gmpy2.log2(gmpy2.mpfr(base.denominator))
            ef = gmpy2.mpfr(e)
            total += ef * (l_n - l_d)
            budget += abs(ef) * (abs(l_n) + abs(l_d) + 2)
        if abs(total) > budget * gmpy2.mpfr(2) ** -100:
            return 1 if total > 0 else -1
    return 0


def compare_pow(base, e, rhs) -> int:
    return compare_product([(base, e)], rhs)


def product_enclosure(factors: Sequence[tuple], precision: int = DEFAULT_PRECISION):
    """Enclosure of prod(base_i ** e_i) from per-factor directed bounds."""
    lo, hi = mpq(1), mpq(1)
    for base, e in factors:
        flo, fhi = pow_enclosure(base, e, precision)
        lo *= flo
        hi *= fhi
    return lo, hi


# ----------------------------------------------------------------- logarithms


def _mpfr_directed(fn, x: Rational, prec: int, down: bool) -> Rational:
    # MPFR rounds correctly in the requested direction, so the result is a rigorous bound
    mode = gmpy2.RoundDown if down else gmpy2.RoundUp
    with gmpy2.context(gmpy2.get_context(), precision=prec, round=mode):
        return mpq(fn(gmpy2.mpfr(x)))


def ln2_enclosure(abs_bits: int = 80):
    # rounded up so that nearby requests share one cached evaluation
    return _ln2_enclosure(-(-abs_bits // 1024) * 1024)


@lru_cache(maxsize=32)
def _ln2_enclosure(abs_bits: int):
    prec = abs_bits + 8
    return (_mpfr_directed(lambda _: gmpy2.const_log2(), mpq(2), prec, True),
            _mpfr_directed(lambda _: gmpy2.const_log2(), mpq(2), prec, False))


def ln_enclosure(x, abs_bits: int = 80):
    """Rational (lo, hi) around ln(x) with hi - lo below about 2**-abs_bits."""
    x = mpq(x)
    if x <= 0:
        raise ValueError("ln of non-positive number")
    if x == 1:
        return mpq(0), mpq(0)
    n, d = x.numerator, x.denominator
    if d == 1 and n & (n - 1) == 0:
        # powers of two: k * ln 2, exact scaling of a cached ln 2 enclosure
        k = int(n.bit_length()) - 1
        lo, hi = ln2_enclosure(abs_bits + k.bit_length() + 1)
        return k * lo, k * hi
    mag = abs(int(n.bit_length()) - int(d.bit_length())) + 2
    prec = abs_bits + mag.bit_length() + 8
    return _mpfr_directed(gmpy2.log, x, prec, True), _mpfr_directed(gmpy2.log, x, prec, False)


# --------------------------------------------------------------------- primes


def sieve_ceiling() -> int:
    raw = os.environ.get(SIEVE_ENV)
    return int(raw) if raw else DEFAULT_SIEVE_CEILING


@lru_cache(maxsize=8)
def _base_primes(limit: int) -> np.ndarray:
    limit = max(limit, 2)
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for i in range(2, int(limit**0.5) + 1):
        if is_p[i]:
            is_p[i * i :: i] = False
    return np.flatnonzero(is_p)


def _sieve_range(lo: int, hi: int) -> list[int]:
    """Primes p with lo <= p < hi (segmented)."""
    lo = max(lo, 2)
    if hi <= lo:
        return []
    seg = np.ones(hi - lo, dtype=bool)
    for p in _base_primes(int((hi - 1) ** 0.5) + 1):
        p = int(p)
        if p * p >= hi:
            break
        start = max(p * p, ((lo + p - 1) // p) * p)
        seg[start - lo :: p] = False
    return [int(x) + lo for x in np.flatnonzero(seg)]


def primes_in(lo: int, hi: int, *, closed_lo: bool = False, ceiling: int | None = None) -> list[int]:
    """Primes with lo < p < hi, or lo <= p < hi when ``closed_lo``."""
    lo, hi = int(lo), int(hi)
    ceiling = sieve_ceiling() if ceiling is None else ceiling
    if hi > ceiling:
        raise CapacityError(
            f"prime range up to {hi} exceeds sieve ceiling {ceiling}; "
            f"family F/EJ is limited to sieve-scale m_k (set {SIEVE_ENV} to raise it)"
        )
    if lo >= hi:
        return []
    return _sieve_range(lo if closed_lo else lo + 1, hi)


_RS_UPPER = mpq(125506, 100000)  # pi(x) < 1.25506 x / ln x for x > 1


def prime_count_bounds(m: int, ceiling: int | None = None) -> tuple[int, int]:
    """(lower, upper) bounds on the number of primes in [m, 2m).

    Exact (lower == upper) inside the sieve ceiling; beyond it the
    Rosser-Schoenfeld inequalities x/ln x < pi(x) (x >= 17) and
    pi(x) < 1.25506 x/ln x are used.
    """
    ceiling = sieve_ceiling() if ceiling is None else ceiling
    m = mpz(m)
    if 2 * m <= ceiling:
        n = len(primes_in(int(m), int(2 * m), closed_lo=True, ceiling=ceiling))
        return n, n
    if m < 17:
        raise ValueError("m too small for analytic prime-count bounds")
    ln_m = ln_enclosure(m)
    ln_2m = ln_enclosure(2 * m)
    # count >= pi(2m) - pi(m)  (2m is composite; m may be prime but counts on the left)
    lower = mpq(2 * m) / ln_2m[1] - _RS_UPPER * m / ln_m[0]
    # count <= pi(2m) - pi(m - 1) <= pi(2m) - pi(m) + 1
    upper = _RS_UPPER * 2 * m / ln_2m[0] - mpq(m) / ln_m[1] + 1
    return max(0, int(ceil_q(lower))), int(floor_q(upper))
