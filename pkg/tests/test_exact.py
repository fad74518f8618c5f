from fractions import Fraction

import mpmath
import pytest
import sympy
from gmpy2 import mpq, mpz
from hypothesis import given, strategies as st

from jarnik.errors import CapacityError
from jarnik.exact import (Interval, Q, compare_product, fmt, gap, ln_enclosure, log2_exact, merge_intervals,
                          pow_bound, pow_enclosure, prime_count_bounds, primes_in, radius_bounds)

fractions = st.fractions(min_value=-10**6, max_value=10**6, max_denominator=10**9)
pos_fracs = st.fractions(min_value=Fraction(1, 10**6), max_value=10**6, max_denominator=10**6)
exponents = st.fractions(min_value=-7, max_value=7, max_denominator=12)


def test_fraction_strings():
    assert Q("21/10") == mpq(21, 10)
    assert Q(" 7 ") == 7
    with pytest.raises(TypeError):
        Q(0.5)


@given(fractions)
def test_fmt_round_trip(x):
    assert Q(fmt(Q(x))) == Q(x)


def test_fmt_beyond_int_str_limit():
    big = mpz(3) ** 20000
    assert Q(fmt(mpq(big, 7))) == mpq(big, 7)


def test_pow_bound_examples():
    assert pow_bound(2, -3, 32, "lower").value == mpq(1, 8)
    r = pow_bound(4, mpq(1, 2), 32, "upper")
    assert r.value == 2 and r.exact
    L = pow_bound(5, mpq(-5, 2), 20, "lower").value
    # oracle: x <= 5^(-5/2) iff x^2 * 5^5 <= 1
    assert L * L * 5 ** 5 <= 1
    assert (L * (1 + mpq(1, 2 ** 20))) ** 2 * 5 ** 5 >= 1


@given(pos_fracs, exponents)
def test_pow_enclosure_brackets(base, e):
    lo, hi = pow_enclosure(Q(base), Q(e), 40)
    assert lo <= hi
    # exact oracle for the rational power: lo^v <= base^u <= hi^v
    u, v = e.numerator, e.denominator
    b = Q(base) ** u
    assert lo ** v <= b <= hi ** v


@given(st.integers(2, 10**6), st.fractions(min_value=2, max_value=6, max_denominator=10))
def test_radius_bounds(p, a):
    lo, hi = radius_bounds(p, Q(a))
    assert lo <= hi
    with mpmath.workprec(256):
        x = mpmath.mpf(p) ** (-mpmath.mpf(a.numerator) / a.denominator)
        assert mpmath.mpf(lo.numerator) / lo.denominator <= x * (1 + mpmath.mpf(2) ** -200)
        assert mpmath.mpf(hi.numerator) / hi.denominator >= x * (1 - mpmath.mpf(2) ** -200)
        assert hi - lo <= lo * mpq(1, 2 ** 60)


@given(st.lists(st.tuples(st.integers(1, 50), st.integers(-4, 4)), min_size=1, max_size=4), pos_fracs)
def test_compare_product_integer_exponents(factors, rhs):
    exact = Fraction(1)
    for b, e in factors:
        exact *= Fraction(b) ** e
    expect = (exact > rhs) - (exact < rhs)
    assert compare_product(factors, Q(rhs)) == expect


def test_compare_product_roots():
    assert compare_product([(4, mpq(1, 2))], 2) == 0
    assert compare_product([(2, mpq(1, 2))], mpq(141421, 100000)) == 1
    assert compare_product([(2, mpq(1, 2))], mpq(141422, 100000)) == -1


@given(st.integers(2, 10**12))
def test_ln_enclosure(x):
    lo, hi = ln_enclosure(x, 60)
    assert lo <= hi and hi - lo <= mpq(1, 2 ** 58)
    with mpmath.workprec(256):
        t = mpmath.log(x)
        assert mpmath.mpf(lo.numerator) / lo.denominator <= t <= mpmath.mpf(hi.numerator) / hi.denominator


def test_log2_exact():
    assert log2_exact(2 ** 20) == 20
    with pytest.raises(ValueError):
        log2_exact(12)


def test_primes_examples():
    assert primes_in(10, 20) == [11, 13, 17, 19]
    assert primes_in(2, 3) == []
    assert len(primes_in(1, 100)) == 25


@given(st.integers(0, 5000), st.integers(0, 5000))
def test_primes_match_sympy(lo, width):
    assert primes_in(lo, lo + width) == list(sympy.primerange(lo + 1, lo + width))


def test_prime_ceiling():
    with pytest.raises(CapacityError):
        primes_in(10, 1000, ceiling=500)


def test_prime_count_bounds_bracket():
    lo, hi = prime_count_bounds(10**5, ceiling=10**4)  # forced analytic route
    exact = len(primes_in(10**5, 2 * 10**5, closed_lo=True))
    assert lo <= exact <= hi
    assert prime_count_bounds(1000) == (135, 135)


def test_gap_examples():
    assert gap(Interval(0, mpq(1, 4)), Interval(mpq(1, 2), mpq(3, 4))) == mpq(1, 4)
    assert gap(Interval(0, mpq(1, 2)), Interval(mpq(1, 2), 1)) == 0


@given(st.lists(st.tuples(st.fractions(0, 1, max_denominator=50), st.fractions(0, 1, max_denominator=50)),
                max_size=12))
def test_merge_intervals_covers(pairs):
    ivs = [Interval(Q(min(a, b)), Q(max(a, b))) for a, b in pairs]
    merged = merge_intervals(ivs)
    for x, y in zip(merged, merged[1:]):
        assert x.hi < y.lo
    for I in ivs:
        assert any(M.lo <= I.lo and I.hi <= M.hi for M in merged)
