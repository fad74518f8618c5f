import math
import os
import stat

import pytest
from gmpy2 import mpq, mpz

from jarnik.demos import demo_construction
from jarnik.errors import CapacityError
from jarnik.interchange import (atomic_write, csv_text, dec, enumerable_depth, export_intervals, import_intervals,
                                interval_records, level_from_dict, level_to_dict, read_csv, read_jsonl,
                                records_sorted, undec, write_csv)


@pytest.mark.parametrize("family", ["E", "G", "EJ", "F"])
def test_demo_round_trip(family, tmp_path):
    C = demo_construction(family)
    n = export_intervals(C, tmp_path / "iv.jsonl")
    C2, recs = import_intervals(tmp_path / "iv.jsonl")
    assert C2.levels == C.levels and C2.family == C.family
    assert recs == interval_records(C2)
    assert n == len(recs) == sum(C.count(k) for k in range(1, enumerable_depth(C) + 1))
    assert records_sorted(recs)


def test_record_counts_are_products(demos):
    for C in demos.values():
        recs = interval_records(C)
        for k in range(1, enumerable_depth(C) + 1):
            level = [r for r in recs if r["level"] == k]
            assert len(level) == math.prod(C.level(j).i_k for j in range(1, k + 1))
            assert all(mpq(r["mass"]) == mpq(1, len(level)) for r in level)
            if k > 1:
                assert {r["parent"] for r in level} == set(range(C.count(k - 1)))


def test_strict_header_only(strict_E, tmp_path):
    _, _, C = strict_E
    assert export_intervals(C, tmp_path / "s.jsonl") == 0
    header = read_jsonl(tmp_path / "s.jsonl")[0]
    assert header["records_through"] == 0
    C2, _ = import_intervals(tmp_path / "s.jsonl")
    assert C2.levels == C.levels
    assert mpz(header["levels"][2]["m"]).bit_length() == 580987


def test_probe_and_classical_round_trip(probe_construction, classical_J, tmp_path):
    for C in (probe_construction, classical_J):
        export_intervals(C, tmp_path / "x.jsonl")
        C2, recs = import_intervals(tmp_path / "x.jsonl")
        assert C2.levels == C.levels and recs == interval_records(C)


def test_level_dict_rejects_unknown(demos):
    d = level_to_dict(demos["E"].level(1))
    assert level_from_dict(d) == demos["E"].level(1)
    with pytest.raises(ValueError):
        level_from_dict(dict(d, extra=1))


def test_capacity(demos):
    with pytest.raises(CapacityError):
        interval_records(demos["EJ"], max_level=3, cap=10)


def test_big_integers():
    n = mpz(3) ** 20000
    assert undec(dec(n)) == n and len(dec(n)) > 4300


def test_atomic_write(tmp_path):
    p = atomic_write(tmp_path / "sub" / "a.txt", "one")
    atomic_write(p, "two")
    assert p.read_text() == "two"
    assert stat.S_IMODE(os.stat(p).st_mode) == 0o644
    assert [f for f in os.listdir(p.parent)] == ["a.txt"]


def test_csv_formatting(tmp_path):
    rows = [{"x": mpq(1, 3), "ok": True, "n": 2 ** 70, "none": None}]
    assert csv_text(rows) == "x,ok,n,none\n1/3,true,1180591620717411303424,\n"
    write_csv(tmp_path / "r.csv", rows)
    assert read_csv(tmp_path / "r.csv")[0]["ok"] == "true"
