from collections import Counter

from gmpy2 import mpq
from hypothesis import given, strategies as st

from jarnik.demos import demo_construction
from jarnik.probe import (cf_convergents, derive_seeds, exponent_estimate, fibonacci_control, probe_convergents,
                          sample_point, sample_rows)


def test_convergents_known():
    assert cf_convergents(mpq(7, 16)) == ([0, 2, 3, 2], [(0, 1), (1, 2), (3, 7), (7, 16)])
    assert cf_convergents(mpq(1, 2)) == ([0, 2], [(0, 1), (1, 2)])


@given(st.integers(1, 10 ** 12), st.integers(1, 10 ** 12))
def test_convergent_properties(n, d):
    x = mpq(n, d)
    _, convs = cf_convergents(x)
    assert mpq(*convs[-1]) == x
    pairs = list(zip(convs, convs[1:]))
    for i, ((p, q), (_, q1)) in enumerate(pairs):
        bound = mpq(1, q * q1)
        # equality only for the convergent just before x itself
        assert abs(x - mpq(p, q)) < bound if i < len(pairs) - 1 else abs(x - mpq(p, q)) <= bound


def test_exact_hit_flag():
    stats = probe_convergents(mpq(3, 7), mpq(0))
    assert stats[-1].exact_hit and stats[-1].z is None
    assert not any(s.exact_hit for s in stats[:-1])


def test_sampling_deterministic_and_nested(probe_construction):
    C = probe_construction
    for s in derive_seeds(7, 20):
        a, b = sample_point(C, 4, s), sample_point(C, 4, s)
        assert a == b and a.nested()
    G = demo_construction("G")
    assert sample_point(G, 1, 5) == sample_point(G, 1, 5)
    assert sample_rows([sample_point(G, 3, 5)])[0]["nested"] is True


def test_derive_seeds():
    s = derive_seeds(123, 50)
    assert s == derive_seeds(123, 50) and len(set(s)) == 50
    assert all(0 <= x < 1 << 64 for x in s)
    assert derive_seeds(123, 60)[:50] == s


def test_uniform_child_choice():
    # chi-square of level-1 child choices against uniform, loose 5-sigma bound
    C = demo_construction("E")
    f = C.level(1).fanout
    counts = Counter(sample_point(C, 1, s).indices[0] for s in derive_seeds(1, 10000))
    exp = 10000 / f
    chi2 = sum((counts.get(j, 0) - exp) ** 2 / exp for j in range(f))
    assert len(counts) == f and chi2 < f - 1 + 5 * (2 * (f - 1)) ** 0.5


def test_probe_containment(probe_construction):
    C = probe_construction
    for s in derive_seeds(3, 25):
        r = exponent_estimate(sample_point(C, 4, s), C, 32)
        assert all(lv.contained for lv in r.levels)
        assert all(lv.zeta is None or lv.zeta[0] >= mpq(14, 5) for lv in r.levels)


def test_fibonacci_control_frozen():
    z = [c for c in fibonacci_control() if c.trusted and c.z is not None]
    assert [c.q for c in z][0] == 2 and z[-1].q == 4181
    assert mpq(30827, 10000) < z[0].z[1] and z[0].z[0] < mpq(30828, 10000)
    low = min(z, key=lambda c: c.z[0])
    assert low.q == 2584 and mpq(2095, 1000) < low.z[1] and low.z[0] < mpq(2096, 1000)
    assert not all(c.z[1] <= mpq(21, 10) for c in z)
