import itertools
import json

import pytest
from gmpy2 import mpq

from jarnik.demos import classical_demo, effective_demo
from jarnik.errors import CapacityError, ConfigError
from jarnik.exact import Q
from jarnik.families import build_construction
from jarnik.path import (StageParams, branch_mass, branch_tree, candidate_branches, classical_init, classical_stage,
                         code_length_witness, effective_init, effective_stage, recompute_certificate, run_classical,
                         select_branch, validate_initial, CandidateEval)
from jarnik.path import TestValue as Check  # aliased so pytest does not try to collect it


def test_candidate_counts():
    J = build_construction("E", [128, 10 ** 8], [3, 3], [5, 7])
    assert len(candidate_branches(J, 0, 1)) == 5
    c = candidate_branches(J, 0, 2)
    assert len(c) == 35 and c == sorted(c)
    notices = []
    assert len(candidate_branches(J, 0, 2, cap=10, notices=notices)) == 10 and notices
    with pytest.raises(CapacityError):
        candidate_branches(J, 0, 2, cap=10, mode="strict")


def test_candidates_disjoint_equal_mass(classical_J):
    J = classical_J
    cands = candidate_branches(J, 0, 1)
    masses = {branch_mass(J, branch_tree(J, c), 1) for c in cands}
    assert len(masses) == 1
    sets = [{n.center for n in branch_tree(J, c).enumerate_level(1)} for c in cands]
    for x, y in itertools.combinations(sets, 2):
        assert not x & y


def test_select_branch_rules():
    mk = lambda sel, ok: CandidateEval(sel, 1, mpq(1), [Check("t", mpq(0), mpq(1), ok)])
    table = {(0,): False, (1,): True, (2,): True}
    chosen, evals = select_branch(list(table)[::-1], lambda c: mk(c, table[c]))
    assert chosen.selectors == (1,) and len(evals) == 2
    chosen, _ = select_branch([(0,)], lambda c: mk(c, False))
    assert chosen is None


def test_classical_demo_frozen(classical_J):
    states, recs = run_classical(classical_J, 4, 2)
    assert [(s.d, s.k, s.prefix) for s in states] == [(2, 0, ()), (3, 1, (0,)), (4, 2, (0, 0))]
    assert [(r.c, len(r.evaluations)) for r in recs] == [(7, 4), (9, 5)]
    assert [s.mu_E for s in states] == [1, mpq(1, 4), mpq(1, 20)]
    for r in recs:
        assert all(v == 0 for v in r.fail_fractions().values())
    for st, r in zip(states[1:], recs):
        assert recompute_certificate(classical_J, st, 4).to_record() == r.certificate.to_record()


def test_exhaustive_agrees_with_selection(classical_J):
    for J, a in ((classical_J, 4), (classical_demo(3), 3)):
        state = classical_init(J, a)
        for _ in range(2):
            nxt_e, rec_e = classical_stage(J, state, a, exhaustive=True)
            nxt_s, rec_s = classical_stage(J, state, a, exhaustive=False)
            any_pass = any(e.passed for e in rec_e.evaluations)
            assert (rec_s.chosen is not None) == any_pass
            if any_pass:
                assert rec_s.chosen.to_record() == rec_e.chosen.to_record()
            if nxt_e is None:
                break
            state = nxt_e


def test_classical_a3_honest_failure():
    J = classical_demo(3)
    states, recs = run_classical(J, 3, 2)
    assert len(states) == 2 and recs[-1].chosen is None
    assert recs[-1].fail_fractions()["test2"] == 1


def test_classical_trajectory_deterministic(classical_J):
    dump = lambda: json.dumps([r.to_record() for r in run_classical(classical_J, 4, 2)[1]], sort_keys=True)
    assert dump() == dump()


def test_path_rejects_prime_families(demos):
    with pytest.raises(ConfigError):
        classical_init(demos["F"].union_tree(), 3)


def test_effective_initial_validation():
    with pytest.raises(ConfigError):
        validate_initial(4, mpq(1, 4), StageParams(Q(3), Q(5), mpq(1, 10), mpq(1, 20)))
    with pytest.raises(ConfigError):
        validate_initial(4, mpq(1, 4), StageParams(mpq(15, 4), mpq(17, 4), mpq(1, 5), mpq(1, 10)))
    validate_initial(4, mpq(1, 4), StageParams(mpq(15, 4), mpq(17, 4), mpq(1, 10), mpq(1, 20)))


def test_effective_demo_frozen():
    setup, p0 = effective_demo()
    state, J, b_seq = effective_init(setup, p0)
    assert state.d == 4
    nxt, J, b_seq, rec = effective_stage(setup, state, J, b_seq)
    assert rec.ell == 2 and rec.k_next == 1 and rec.chosen.selectors == (0,)
    assert nxt.d == 5
    assert b_seq == [mpq(1, 8), mpq(11, 80), mpq(23, 160), mpq(17, 80)]
    assert all(x < y for x, y in zip(b_seq, b_seq[1:]))
    assert all(e.passed == (e is rec.chosen) or e.passed for e in rec.evaluations)


def test_witness_small_level():
    C = build_construction("E", [2 ** 20], [3], [255], [0])
    w = code_length_witness(C, 1, mpq(1, 5), mpq(1, 100), mpq(1, 5))
    assert (w.N, w.L, w.budget, w.passed, w.chain_ok) == (4112, 13, 13, True, True)
    P = build_construction("E", [2 ** 20], [3], [256], [0])
    w = code_length_witness(P, 1, mpq(1, 5), mpq(1, 100), mpq(1, 5))
    assert w.N == 2 ** 12 - 1 and w.L == 12


def test_witness_strict_levels(strict_E):
    seqs, _, C = strict_E
    got = []
    for ell in (1, 2, 3):
        w = code_length_witness(C, ell, seqs.b_seq[ell - 1], seqs.b_seq[ell + 1] - seqs.b_seq[ell - 1], mpq(1, 5),
                                rationals=[3, mpq(1, 5)])
        assert w.passed and w.chain_ok and w.certifying
        got.append((w.L, w.budget))
    assert got == [(28, 29), (2341, 2476), (326836, 337699)]
    demo = code_length_witness(C, 1, seqs.b_seq[0], seqs.b_seq[2] - seqs.b_seq[0], mpq(1, 5), certifying=False)
    assert demo.to_record()["certifying"] is False
