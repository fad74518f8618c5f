"""Acceptance criteria 1-11, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal summary) or
``python tests/test_acceptance.py``.  Criteria that cannot be met fail; none are skipped or xfailed.
"""
from __future__ import annotations

import contextlib
import filecmp
import io
import json
import math
import os
import random
import sys
import tempfile
import time
from contextlib import contextmanager
from functools import lru_cache
from pathlib import Path

import pytest
from gmpy2 import mpq

from jarnik.cli import main as cli_main
from jarnik.config import load_config
from jarnik.demos import classical_demo, demo_construction, effective_demo, probe_demo
from jarnik.exact import Interval, Q, fmt
from jarnik.families import build_K, build_construction
from jarnik.interchange import export_intervals, import_intervals, interval_records, records_sorted
from jarnik.measure import (check_mass_bound, choose_d, count_meeting, covering_sum_closed_form_holds,
                            covering_sum_decreases, mu, mu_enumerated, mutation_search, rebuild_with_q, sweep,
                            tail_sum_bound)
from jarnik.path import (classical_init, classical_stage, code_length_witness, recompute_certificate,
                         run_classical)
from jarnik.pipeline import Pipeline
from jarnik.probe import fibonacci_control, probe_batch
from jarnik.sequences import TargetSpec, check_window, q_strict_holds, synthesize

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
STRICT_TARGETS = {"E": (Q(3), Q(1, 5)), "F": (Q(3), Q(1, 2)), "G": (Q(2), Q(1, 2))}
PROBE_SEED = 2024
QUERY_SEED = 1


BUILDABLE = ("E", "G")  # strict F needs primes near m_k, far past any sieve


@lru_cache(maxsize=None)
def strict(family: str):
    """(seqs, report, construction or None, seconds spent synthesizing and building)."""
    t = time.perf_counter()
    a, b = STRICT_TARGETS[family]
    seqs, rep = synthesize(TargetSpec(a, b, family, 3))
    C = None
    if family in BUILDABLE:
        C = build_construction(family, seqs.m_seq, seqs.a_seq, seqs.q_seq, [0, 0, 0])
    return seqs, rep, C, time.perf_counter() - t


@contextmanager
def _timer():
    box = [time.perf_counter()]
    yield box
    box[0] = time.perf_counter() - box[0]


def c1_gap_certificates():
    parts, ok = [], True
    with _timer() as t:
        for M, a in ((20, Q(3)), (50, Q(3)), (100, Q(5, 2))):
            fam = build_K(M, a, route="exhaustive")
            good = fam.min_cross_gap is None or fam.min_cross_gap >= mpq(1, 8 * M * M)
            ok &= good
            parts.append(f"K_{M}({fmt(a)}) min gap {fmt(fam.min_cross_gap)} {'>=' if good else '<'} 1/{8 * M * M}")
    ok &= t[0] < 5
    return ok, "; ".join(parts) + f"; {t[0]:.2f}s (< 5s)"


def _random_query(rng, nodes):
    if rng.random() < 0.5:
        lo = mpq(rng.randrange(10 ** 6), 10 ** 6)
        return Interval(lo, lo + mpq(rng.randrange(1, 10 ** 5), 10 ** 6))
    n = rng.choice(nodes)
    return Interval(n.lo - mpq(rng.randrange(3), 10 ** 9), n.hi + mpq(rng.randrange(3), 10 ** 9))


def c2_measure_oracle():
    rng = random.Random(QUERY_SEED)
    parts, ok = [], True
    with _timer() as t:
        for fam in ("E", "G", "EJ", "F"):
            C = demo_construction(fam)
            nodes = C.enumerate_level(3)
            ok &= len(nodes) <= 10 ** 5
            bad = sum(mu(C, I, 3) != mu_enumerated(C, I, 3) for I in (_random_query(rng, nodes) for _ in range(200)))
            ok &= bad == 0
            parts.append(f"{fam}: {bad}/200 mismatches over {len(nodes)} intervals")
    ok &= t[0] < 30
    return ok, "; ".join(parts) + f"; {t[0]:.2f}s (< 30s)"


def _normalization(C, enumerate_levels: bool) -> bool:
    for k in range(1, C.depth + 1):
        if enumerate_levels:
            total = sum(count_meeting(C, n.interval, k) for n in C.enumerate_level(k)) * C.mass(k)
        else:
            total = C.count(k) * C.mass(k)
        if total != 1:
            return False
    return True


def c3_normalization():
    enumerated = {f"demo {f}": demo_construction(f) for f in ("E", "G", "EJ", "F")}
    enumerated["probe"] = probe_demo().truncate(3)
    symbolic = {f"strict {f}": strict(f)[2] for f in BUILDABLE}
    symbolic["classical union"] = classical_demo(4)
    bad = [n for n, C in enumerated.items() if not _normalization(C, True)]
    bad += [n for n, C in symbolic.items() if not _normalization(C, False)]
    return not bad, (f"enumerated sum of mu = 1 at every level for {len(enumerated)} constructions; "
                     f"count x mass = 1 for {len(symbolic)} non-enumerable ones; failures: {bad or 'none'}")


def c4_mass_sweep():
    seqs, _, C, synth_s = strict("E")
    with _timer() as t:
        rows = sweep(C, seqs.b_seq)
        tested = [r for r in rows if r.status != "skipped"]
        fails = [r for r in tested if r.status == "fail"]
        recheck = all(check_mass_bound(r.mu, r.interval.length, seqs.b_seq[r.k - 1]) for r in tested)
        L1 = C.level(1)
        lower, upper = check_window("E", L1.m, L1.a_k, seqs.b_seq[1], seqs.b_seq[2], 2 * L1.q)
        single = [r for r in sweep(rebuild_with_q(C, 1, 2 * L1.q), seqs.b_seq, levels=[2]) if r.status == "fail"]
        mut = mutation_search(C, 1, seqs.b_seq)
    total = t[0] + synth_s
    ok = bool(tested) and not fails and recheck and bool(mut.failures) and total < 60
    return ok, (f"{len(tested)} in-window tests, {len(fails)} failures ({len(rows) - len(tested)} out-of-window skipped); "
                f"mutation 1/q_1 halved once: window holds={lower and upper}, sweep failures={len(single)}; "
                f"sweep fails first at 1/q_1 shrunk by {mut.factor}: {len(mut.failures)} failures; "
                f"{total:.1f}s (< 60s)")


def c5_q_windows():
    parts, ok, total = [], True, 0.0
    for fam in ("E", "F", "G"):
        seqs, _, _, s = strict(fam)
        with _timer() as t:
            fam_ok = True
            for k in range(1, 4):
                m, q, a_k, C_k = seqs.m_seq[k - 1], seqs.q_seq[k - 1], seqs.a_seq[k - 1], seqs.C_seq[k - 1]
                b1, b2 = seqs.b_seq[k], seqs.b_seq[k + 1]
                fam_ok &= all(check_window(fam, m, a_k, b1, b2, q))
                fam_ok &= q_strict_holds(fam, m, a_k, b1, C_k, q) and not q_strict_holds(fam, m, a_k, b1, C_k, q + 1)
        total += s + t[0]
        ok &= fam_ok
        parts.append(f"{fam}: windows and maximality {'hold' if fam_ok else 'FAIL'} "
                     f"(m bits {[int(m.bit_length()) for m in seqs.m_seq]})")
    ok &= total < 60
    return ok, "; ".join(parts) + f"; {total:.1f}s including synthesis (< 60s)"


def c6_covering_sums():
    seqs, _, C, _ = strict("E")
    beta = Q(1, 5) + Q(1, 20)
    res = [(covering_sum_decreases(C, k, beta), covering_sum_closed_form_holds(C, k, beta, seqs.b_seq[k + 1]))
           for k in (1, 2, 3)]
    ok = all(d and c for d, c in res)
    return ok, f"beta = {fmt(beta)}; (decreases, closed-form bound) for k=1..3: {res}"


def _tail_oracle(d: int, ab: int, terms: int = 10 ** 6):
    # sum_{t>=d} 2^-ab t^(1-ab): fsum partial sum plus integral bounds on the remainder
    e = ab - 1
    s = math.fsum(t ** -e for t in range(d, d + terms))
    N = d + terms
    rem_lo = N ** (1 - e) / (e - 1)
    rem_hi = rem_lo + N ** -e
    scale = 2.0 ** -ab
    return (s + rem_lo) * scale, (s + rem_hi) * scale


def c7_tail_sums():
    parts, ok = [], True
    for d, ab in ((2, 3), (2, 4)):
        lo, hi = tail_sum_bound(d, Q(ab))
        o_lo, o_hi = _tail_oracle(d, ab)
        slack = 1e-15  # float rounding in the oracle
        inside = float(lo) <= o_lo + slack and o_hi - slack <= float(hi)
        narrow = hi - lo <= mpq(1, 2 ** 20)
        ok &= inside and narrow
        parts.append(f"(d={d}, ab={ab}) [{float(lo):.10f}, {float(hi):.10f}] width {float(hi - lo):.2e} "
                     f"oracle [{o_lo:.10f}, {o_hi:.10f}] bracketed={inside}")
    d = choose_d(Q(1, 2), Q(3))
    scan = next(n for n in range(1, 1000) if tail_sum_bound(n, Q(3))[1] < Q(1, 2))
    ok &= d == scan
    parts.append(f"choose_d(1/2, 3) = {d}, linear scan = {scan}")
    return ok, "; ".join(parts)


def _trajectory_bytes():
    return json.dumps([r.to_record() for r in run_classical(classical_demo(4), 4, 2)[1]], sort_keys=True).encode()


def c8_path_selector():
    J, a = classical_demo(4), 4
    state, ok, parts = classical_init(J, a), True, []
    for _ in range(2):
        nxt_e, rec_e = classical_stage(J, state, a, exhaustive=True)
        nxt_s, rec_s = classical_stage(J, state, a)
        n = len(rec_e.evaluations)
        passer = any(e.passed for e in rec_e.evaluations)
        agree = (rec_s.chosen is not None) == passer
        if passer and rec_s.chosen is not None:
            agree &= rec_s.chosen.to_record() == rec_e.chosen.to_record()
        ok &= agree and n <= 512
        if nxt_s is None:
            parts.append(f"stage {rec_s.s}: {n} candidates, no passer")
            ok = False
            break
        same = recompute_certificate(J, nxt_s, a).to_record() == rec_s.certificate.to_record()
        ok &= same
        parts.append(f"stage {rec_s.s}: {n} candidates, selection agrees with exhaustive={agree}, "
                     f"certificate recomputes={same}")
        state = nxt_s
    det = _trajectory_bytes() == _trajectory_bytes()
    ok &= det
    return ok, "; ".join(parts) + f"; trajectory byte-identical={det}"


def c9_witness():
    seqs, _, C, _ = strict("E")
    parts, ok = [], True
    for ell in (1, 2, 3):
        w = code_length_witness(C, ell, seqs.b_seq[ell - 1], seqs.b_seq[ell + 1] - seqs.b_seq[ell - 1], Q(1, 5),
                                rationals=[Q(3), Q(1, 5)])
        ok &= w.passed and w.certifying
        parts.append(f"L_{ell}={w.L} <= {w.budget}" if w.passed else f"L_{ell}={w.L} > {w.budget}")
    with tempfile.TemporaryDirectory() as d:
        cfg = load_config(CONFIGS / "demo_E.ini", {"out_dir": d})
        res = Pipeline(cfg).witness()
        recs = [json.loads(x) for x in (Path(d) / "witness.jsonl").read_text().splitlines()]
    demo_ok = not res.certifying and all(r["certifying"] is False for r in recs)
    ok &= demo_ok
    return ok, "strict E: " + ", ".join(parts) + f"; demo run witness marked non-certifying={demo_ok}"


def c10_probe():
    with _timer() as t:
        C = probe_demo()
        res = probe_batch(C, 4, 100, PROBE_SEED, max_terms=64)
        pairs = [lv for r in res for lv in r.levels]
        contained = sum(lv.contained for lv in pairs)
        scored = [lv for lv in pairs if lv.delta > 0]
        high = sum(lv.zeta[0] >= 3 - mpq(1, 5) for lv in scored)
        ctrl = [c for c in fibonacci_control(20) if c.trusted and c.z is not None]
        fib_ok = all(c.z[1] <= 2 + mpq(1, 10) for c in ctrl)
        worst = max(ctrl, key=lambda c: c.z[1])
    ok = contained == len(pairs) and 100 * high >= 95 * len(scored) and fib_ok and t[0] < 60
    return ok, (f"delta <= rho for {contained}/{len(pairs)} pairs; zeta_lo >= 14/5 for {high}/{len(scored)}; "
                f"Fibonacci control: all trusted z <= 21/10 is {fib_ok} "
                f"(q={worst.q} has z >= {float(worst.z[0]):.4f}); {t[0]:.1f}s (< 60s)")


def _cli_tree(config: str, root: Path) -> Path:
    root.mkdir()
    cwd = os.getcwd()
    os.chdir(root)
    try:
        with contextlib.redirect_stdout(io.StringIO()):
            code = cli_main(["run", "--config", str(CONFIGS / config)])
    finally:
        os.chdir(cwd)
    if code != 0:
        raise AssertionError(f"{config} exited {code}")
    return root


def _files(root: Path) -> list[str]:
    return sorted(str(p.relative_to(root)) for p in root.rglob("*") if p.is_file())


def c11_round_trip():
    constructions = {f"demo {f}": demo_construction(f) for f in ("E", "G", "EJ", "F")}
    constructions.update({f"strict {f}": strict(f)[2] for f in BUILDABLE})
    constructions["probe"] = probe_demo()
    constructions["classical"] = classical_demo(4)
    eff = effective_demo()[0]
    constructions["effective union"] = build_construction("E", eff.m_list, [eff.a] * len(eff.m_list), eff.q_list)
    bad = []
    with tempfile.TemporaryDirectory() as d:
        for name, C in constructions.items():
            p = Path(d) / "iv.jsonl"
            export_intervals(C, p)
            C2, recs = import_intervals(p)
            if C2 != C or recs != interval_records(C2) or not records_sorted(recs):
                bad.append(name)
        mismatched = []
        for config in ("demo_E.ini", "demo_G.ini", "path_classical.ini"):
            one, two = _cli_tree(config, Path(d) / f"{config}.1"), _cli_tree(config, Path(d) / f"{config}.2")
            files = _files(one)
            _, mis, err = filecmp.cmpfiles(one, two, files, shallow=False)
            if files != _files(two) or mis or err:
                mismatched.append(config)
    ok = not bad and not mismatched
    return ok, (f"export/import identity on {len(constructions)} constructions (failures: {bad or 'none'}); "
                f"double-run artifacts byte-identical for demo_E, demo_G, path_classical (failures: {mismatched or 'none'})")


CRITERIA = [
    (1, "gap certificates", c1_gap_certificates),
    (2, "measure oracle equivalence", c2_measure_oracle),
    (3, "normalization", c3_normalization),
    (4, "mass-distribution sweep", c4_mass_sweep),
    (5, "q-window certificates", c5_q_windows),
    (6, "covering-sum decay", c6_covering_sums),
    (7, "tail-sum enclosures", c7_tail_sums),
    (8, "path-selector oracle agreement", c8_path_selector),
    (9, "effective witness", c9_witness),
    (10, "Diophantine probe", c10_probe),
    (11, "round-trip and determinism", c11_round_trip),
]

RESULTS: dict[int, str] = {}


def line(num: int, name: str, ok: bool, detail: str) -> str:
    return f"criterion {num:2d} {'PASS' if ok else 'FAIL'} {name}: {detail}"


@pytest.mark.parametrize("num,name,fn", CRITERIA, ids=[f"criterion_{n:02d}" for n, _, _ in CRITERIA])
def test_criterion(num, name, fn):
    ok, detail = fn()
    RESULTS[num] = line(num, name, ok, detail)
    print(RESULTS[num])
    assert ok, RESULTS[num]


if __name__ == "__main__":
    failed = 0
    for num, name, fn in CRITERIA:
        ok, detail = fn()
        failed += not ok
        print(line(num, name, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
