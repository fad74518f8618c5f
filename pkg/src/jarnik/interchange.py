"""Lossless interchange formats: JSON-Lines interval records, CSV sweeps and plot data.

Every number leaves the process as a decimal integer or fraction string.
Files are written to a temporary sibling and renamed into place.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

from gmpy2 import mpq, mpz

from .errors import CapacityError
from .exact import Q, fmt, pow_enclosure
from .families import ENUM_CAP, Construction, LevelSpec, Node
from .sequences import SynthReport

FORMAT = "jarnik-intervals/1"

LEVEL_FIELDS = ("k", "family", "m", "a_k", "q", "selector", "i_k", "g_k", "rad_lo", "rad_hi", "pool", "rule",
                "i_k_method")


def dec(n) -> str:
    # gmpy2 handles integers past the interpreter's int/str digit limit
    return mpz(n).digits(10)


def undec(s: str) -> int:
    return int(mpz(s))


def atomic_write(path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.chmod(tmp, 0o644)  # mkstemp creates 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def dumps_line(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def write_jsonl(path, records: Iterable[dict]) -> Path:
    return atomic_write(path, "".join(dumps_line(r) + "\n" for r in records))


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


# ------------------------------------------------------------ level headers


def _selector_out(sel):
    if sel is None:
        return None
    if isinstance(sel, tuple):
        return [dec(p) for p in sel]
    return dec(sel)


def _selector_in(v):
    if v is None:
        return None
    if isinstance(v, list):
        return tuple(undec(p) for p in v)
    return undec(v)


def level_to_dict(L: LevelSpec) -> dict:
    return {"k": L.k, "family": L.family, "m": dec(L.m), "a_k": fmt(L.a_k), "q": dec(L.q),
            "selector": _selector_out(L.selector), "i_k": dec(L.i_k), "g_k": fmt(L.g_k),
            "rad_lo": fmt(L.rad_lo), "rad_hi": fmt(L.rad_hi), "pool": [dec(p) for p in L.pool],
            "rule": L.rule, "i_k_method": L.i_k_method}


def level_from_dict(d: dict) -> LevelSpec:
    unknown = set(d) - set(LEVEL_FIELDS)
    if unknown:
        raise ValueError(f"unknown level fields {sorted(unknown)}")
    return LevelSpec(k=int(d["k"]), family=d["family"], m=undec(d["m"]), a_k=Q(d["a_k"]), q=undec(d["q"]),
                     selector=_selector_in(d["selector"]), i_k=undec(d["i_k"]), g_k=Q(d["g_k"]),
                     rad_lo=Q(d["rad_lo"]), rad_hi=Q(d["rad_hi"]), pool=tuple(undec(p) for p in d["pool"]),
                     rule=d["rule"], i_k_method=d["i_k_method"])


def _provenance_out(prov: dict) -> dict:
    # only plain JSON values survive; exact rationals go out as strings
    out = {}
    for k, v in sorted(prov.items()):
        if isinstance(v, (str, int, bool)) or v is None:
            out[k] = v
        else:
            try:
                out[k] = fmt(v)
            except (TypeError, ValueError):
                out[k] = str(v)
    return out


# ------------------------------------------------------------ interval records


def enumerable_depth(C: Construction, cap: int = ENUM_CAP) -> int:
    """Deepest level whose cumulative interval count (all levels so far) stays under ``cap``."""
    total, depth = 0, 0
    for k in range(1, C.depth + 1):
        total += C.count(k)
        if total > cap:
            break
        depth = k
    return depth


def _record(C: Construction, k: int, node: Node, parent: int, mass) -> dict:
    rec = {"level": k, "parent": parent, "mass": fmt(mass)}
    if C.family == "G":
        rec.update(lo=fmt(node.lo), hi=fmt(node.hi))
    else:
        rec.update(center=fmt(node.center), radius_lo=fmt(node.rad_lo), radius_hi=fmt(node.rad_hi))
    return rec


def interval_records(C: Construction, max_level: Optional[int] = None, cap: int = ENUM_CAP) -> list[dict]:
    """Records for levels 1..max_level sorted by (level, lo); ``parent`` indexes the previous level's records."""
    K = enumerable_depth(C, cap) if max_level is None else max_level
    if max_level is not None and sum(C.count(k) for k in range(1, K + 1)) > cap:
        raise CapacityError(f"levels 1..{K} exceed the export cap {cap}")
    out, prev_pos = [], {0: -1}  # enumerate_level index -> sorted position
    for k in range(1, K + 1):
        pairs = C.enumerate_with_parents(k, cap)
        order = sorted(range(len(pairs)), key=lambda i: (pairs[i][0].lo, pairs[i][0].hi, i))
        mass = C.mass(k)
        pos = {}
        for p, i in enumerate(order):
            node, parent = pairs[i]
            out.append(_record(C, k, node, prev_pos.get(parent, -1) if k > 1 else -1, mass))
            pos[i] = p
        prev_pos = pos
    return out


def record_lo(rec: dict):
    if "lo" in rec:
        return Q(rec["lo"])
    return Q(rec["center"]) - Q(rec["radius_lo"])


def records_sorted(records: Sequence[dict]) -> bool:
    keys = [(r["level"], record_lo(r)) for r in records]
    return all(a <= b for a, b in zip(keys, keys[1:]))


def export_intervals(C: Construction, path, *, cap: int = ENUM_CAP, max_level: Optional[int] = None) -> int:
    """Header line with every exact level field, then interval records; returns the record count."""
    recs = interval_records(C, max_level, cap)
    through = max((r["level"] for r in recs), default=0)
    header = {"kind": "construction", "format": FORMAT, "family": C.family,
              "levels": [level_to_dict(L) for L in C.levels], "records_through": through,
              "provenance": _provenance_out(C.provenance)}
    write_jsonl(path, [header] + [dict(r, kind="interval") for r in recs])
    return len(recs)


def construction_from_header(header: dict) -> Construction:
    if header.get("format") != FORMAT:
        raise ValueError(f"unsupported interval format {header.get('format')!r}")
    levels = tuple(level_from_dict(d) for d in header["levels"])
    return Construction(header["family"], levels, dict(header.get("provenance") or {}))


def import_intervals(path) -> tuple[Construction, list[dict]]:
    lines = read_jsonl(path)
    if not lines or lines[0].get("kind") != "construction":
        raise ValueError("missing construction header")
    recs = [{k: v for k, v in r.items() if k != "kind"} for r in lines[1:]]
    return construction_from_header(lines[0]), recs


# ------------------------------------------------------------------------ CSV


def csv_text(rows: Sequence[dict], fieldnames: Optional[Sequence[str]] = None) -> str:
    if fieldnames is None:
        fieldnames = list(rows[0]) if rows else []
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(r.get(k, "")) for k in fieldnames})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return dec(v)
    return fmt(v)


def write_csv(path, rows: Sequence[dict], fieldnames: Optional[Sequence[str]] = None) -> Path:
    return atomic_write(path, csv_text(rows, fieldnames))


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


SWEEP_FIELDS = ("level", "constraint", "lo", "hi", "lhs", "rhs", "pass", "status", "reason")


def sweep_rows(rows) -> list[dict]:
    """Sweep results as (constraint, lhs, rhs, pass): lhs = mu(I), rhs = |I|^b_k written symbolically."""
    out = []
    for r in rows:
        d = r.to_row()
        out.append({"level": d["level"], "constraint": f"mu(I) < |I|^b_k [{d['label']}]", "lo": d["lo"],
                    "hi": d["hi"], "lhs": d["mu"], "rhs": f"({d['length']})^({d['b_k']})",
                    "pass": "" if r.status == "skipped" else r.status == "pass", "status": r.status, "reason": r.reason})
    return out


PLOT_FIELDS = ("level", "label", "length", "mu", "b_k", "power_lo", "power_hi")


def plot_rows(rows, precision: int = 64) -> list[dict]:
    """Scale vs mu(I) vs an enclosure of |I|^b_k, for external plotting."""
    out = []
    for r in rows:
        length = r.interval.length
        lo, hi = pow_enclosure(length, r.b_k, precision)
        out.append({"level": r.k, "label": r.label, "length": fmt(length), "mu": "" if r.mu is None else fmt(r.mu),
                    "b_k": fmt(r.b_k), "power_lo": fmt(lo), "power_hi": fmt(hi)})
    return out


SYNTH_FIELDS = ("level", "constraint", "lhs", "rhs", "relation", "pass")


def synth_rows(report: SynthReport) -> list[dict]:
    return [{"level": r.level, "constraint": r.constraint, "lhs": r.lhs, "rhs": r.rhs, "relation": r.relation,
             "pass": r.satisfied} for r in report.records]
