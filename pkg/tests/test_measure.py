import mpmath
import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from jarnik.errors import ConfigError
from jarnik.exact import Interval, Q
from jarnik.families import build_construction
from jarnik.measure import (BSetSpec, b_set_cover_measure, b_set_enumerate, check_mass_bound, choose_d,
                            count_meeting, covering_sum, covering_sum_closed_form_holds, covering_sum_decreases,
                            d_gap_ok, dyadic_test_intervals, mu, mu_enumerated, mu_report, scale_window,
                            tail_sum_bound, verify_mass_distribution)

unit = st.fractions(min_value=0, max_value=1, max_denominator=10 ** 7)


def _interval(x, y):
    x, y = Q(x), Q(y)
    return Interval(min(x, y), max(x, y))


def test_whole_line_and_single_interval(demos):
    C = demos["E"]
    for k in (1, 2, 3):
        assert mu(C, Interval(0, 1), k) == 1
    node = C.enumerate_level(2)[5]
    assert mu(C, node.interval, 2) == mpq(1, C.level(1).i_k * C.level(2).i_k)


@pytest.mark.parametrize("fam", ["E", "G"])
@given(x=unit, y=unit)
def test_recursive_matches_enumeration(demos, fam, x, y):
    C = demos[fam]
    I = _interval(x, y)
    assert mu(C, I, 3) == mu_enumerated(C, I, 3)


@given(x=unit, y=unit, z=unit)
def test_monotone(demos, x, y, z):
    C = demos["E"]
    lo, mid, hi = sorted(map(Q, (x, y, z)))
    assert mu(C, Interval(lo, mid), 3) <= mu(C, Interval(lo, hi), 3)


@given(st.integers(0, 376), unit, unit)
def test_additive_across_gaps(demos, i, x, y):
    # a cut point inside a gap between neighbouring level-3 intervals splits mu exactly
    C = demos["E"]
    nodes = C.enumerate_level(3)
    cut = (nodes[i].hi + nodes[i + 1].lo) / 2
    lo, hi = min(Q(x), cut), max(Q(y), cut)
    assert mu(C, Interval(lo, hi), 3) == mu(C, Interval(lo, cut), 3) + mu(C, Interval(cut, hi), 3)


def test_subadditive_at_shared_endpoint(demos):
    C = demos["E"]
    n = C.enumerate_level(3)[10]
    c = n.center
    # closed intervals both meet the node: counting is an upper bound, never below the truth
    assert mu(C, Interval(n.lo, c), 3) + mu(C, Interval(c, n.hi), 3) >= mu(C, n.interval, 3)


def test_normalization(demos):
    for C in demos.values():
        for k in (1, 2, 3):
            total = sum(count_meeting(C, n.interval, k) for n in C.enumerate_level(k)) * C.mass(k)
            assert total == 1


def test_report_recomputes(demos):
    C = demos["F"]
    rep = mu_report(C, Interval(mpq(1, 7), mpq(3, 5)), 3)
    assert rep.value == mu_enumerated(C, rep.interval, 3)
    assert rep.recompute() == rep.value
    assert Q(rep.to_record()["mu"]) == rep.value


def test_sweep_single_level_interval(strict_E):
    seqs, _, C = strict_E
    node = C.node_at(2, 12345)
    # mu(I) = 1/(i_1 i_2) against (2 rho_2)^b_2, evaluated directly
    assert check_mass_bound(C.mass(2), node.length, seqs.b_seq[1])


def test_light_sweep_passes(strict_E):
    seqs, _, C = strict_E
    rows = verify_mass_distribution(C, 2, dyadic_test_intervals(C, 2, scales=3, anchors=2), seqs.b_seq)
    tested = [r for r in rows if r.status != "skipped"]
    assert tested and all(r.status == "pass" for r in tested)
    lo, hi = scale_window(C, 2)
    assert all(lo <= r.length < hi for r in tested)


def test_demo_with_synthesized_q_sweeps_clean(strict_E):
    from jarnik.measure import sweep
    from jarnik.sequences import TargetSpec, synthesize
    # demo mode with q_k synthesized (not given) on strict-sized m_k
    seqs, _ = synthesize(TargetSpec(3, mpq(1, 5), "E", 2, "demo"), demo_m=strict_E[0].m_seq[:2])
    C = build_construction("E", seqs.m_seq, seqs.a_seq, seqs.q_seq, [0, 0])
    rows = sweep(C, seqs.b_seq, scales=4, anchors=2)
    assert rows and all(r.status != "fail" for r in rows)


def test_covering_sums(strict_E, demos):
    seqs, _, C = strict_E
    beta = mpq(1, 5) + mpq(1, 20)
    for k in (1, 2, 3):
        assert covering_sum_decreases(C, k, beta)
        assert covering_sum_closed_form_holds(C, k, beta, seqs.b_seq[k + 1])
    G = demos["G"]
    for k in (1, 2, 3):
        cs = covering_sum(G, k, 1)
        assert cs.value_lo == cs.value_hi == sum(n.length for n in G.enumerate_level(k))


def test_b_set_examples():
    b = b_set_enumerate(BSetSpec(2, 2, 3))
    assert [(x.interval.lo, x.interval.hi) for x in b] == [(0, mpq(1, 8)), (mpq(3, 8), mpq(5, 8)), (mpq(7, 8), 1)]
    assert BSetSpec(2, 4, 3).count() == 12 == len(b_set_enumerate(BSetSpec(2, 4, 3)))
    assert BSetSpec(5, 4, 3).count() == 0
    with pytest.raises(ConfigError):
        BSetSpec(1, 4, 3)


def test_b_set_cover_measure(demos):
    C = demos["E"]
    assert b_set_cover_measure(C, 3, BSetSpec(5, 4, 3)) == 0
    assert b_set_cover_measure(C, 3, [Interval(0, 1)]) == 1
    spec = BSetSpec(2, 4, 3)
    comps = [x.interval for x in b_set_enumerate(spec)]
    brute = sum(1 for n in C.enumerate_level(3) if any(n.lo <= I.hi and I.lo <= n.hi for I in comps))
    assert b_set_cover_measure(C, 3, spec) == brute * C.mass(3)


@pytest.mark.parametrize("d,ab,exact", [(2, 3, lambda: (mpmath.zeta(2) - 1) / 8),
                                        (2, 4, lambda: (mpmath.zeta(3) - 1) / 16),
                                        (5, mpq(7, 2), lambda: mpmath.zeta(mpmath.mpf(5) / 2, 5) / 2 ** 3.5)])
def test_tail_sum_encloses_zeta(d, ab, exact):
    lo, hi = tail_sum_bound(d, ab)
    assert hi - lo <= mpq(1, 2 ** 20)
    with mpmath.workprec(120):
        v = exact()
        assert mpmath.mpf(lo.numerator) / lo.denominator <= v <= mpmath.mpf(hi.numerator) / hi.denominator


@given(st.integers(1, 200), st.sampled_from([3, 4, mpq(7, 2), mpq(13, 4)]))
def test_tail_sum_monotone(d, ab):
    assert tail_sum_bound(d + 1, ab)[1] < tail_sum_bound(d, ab)[1]


def test_choose_d_linear_scan():
    assert choose_d(mpq(1, 2), 3) == 1
    for budget in (mpq(1, 100), mpq(1, 1000), mpq(1, 7919)):
        d = choose_d(budget, mpq(13, 4))
        scan = next(n for n in range(1, 10 ** 4) if tail_sum_bound(n, mpq(13, 4))[1] < budget)
        assert d == scan


def test_choose_d_gap_binding():
    g = mpq(1, 10 ** 9)
    d = choose_d(mpq(1, 2), 3, gap=g)
    assert d_gap_ok(d, 3, g) and not d_gap_ok(d - 1, 3, g)


def test_choose_d_monotone_in_budget():
    ds = [choose_d(mpq(1, 4 * 2 ** (s + 1)), mpq(7, 2)) for s in range(6)]
    assert ds == sorted(ds)
