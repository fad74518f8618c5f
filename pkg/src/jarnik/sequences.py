"""Parameter sequences a_k, b_k, m_k, q_k and the growth function f.

The growth function is realized as: the least power of two satisfying an
explicit list of constraints.  Every constraint that was evaluated is kept in a
``SynthReport`` so a run can be audited afterwards.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import gmpy2
from gmpy2 import mpq, mpz

from .errors import CapacityError, ConfigError, InvariantError, TooSmallError
from .exact import (
    DEFAULT_PRECISION,
    Q,
    Rational,
    ceil_q,
    compare_product,
    floor_q,
    fmt,
    ln_enclosure,
    log2_exact,
    pow_enclosure,
    prime_count_bounds,
)

FAMILIES = ("EJ", "E", "F", "G")
MODES = ("strict", "demo")
DEFAULT_BIT_CAP = 1 << 24


@dataclass(frozen=True)
class TargetSpec:
    a: Rational
    b: Rational
    family: str
    depth: int
    mode: str = "strict"

    def __post_init__(self):
        object.__setattr__(self, "a", Q(self.a))
        object.__setattr__(self, "b", Q(self.b))
        a, b, fam = self.a, self.b, self.family
        if fam not in FAMILIES:
            raise ConfigError(f"unknown family {fam!r}; expected one of {FAMILIES}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.depth < 1:
            raise ConfigError("depth must be a positive integer")
        if a < 2:
            raise ConfigError("a must be >= 2")
        if not 0 <= b <= 2 / a:
            raise ConfigError("b must lie in [0, 2/a]")
        if fam == "E" and b > 1 / a:
            raise ConfigError("family E (0 < b <= 1/a) requires b <= 1/a")
        if fam == "F" and not (a > 2 and 1 / a <= b):
            raise ConfigError("family F (1/a <= b <= 2/a) requires a > 2 and b >= 1/a")
        if fam == "G" and not (a == 2 and 0 < b <= 1):
            raise ConfigError("family G (irrationality exponent 2) requires a = 2 and 0 < b <= 1")


@dataclass
class SynthRecord:
    level: int
    constraint: str
    lhs: str
    rhs: str
    relation: str
    satisfied: bool


@dataclass
class SynthReport:
    records: list[SynthRecord] = field(default_factory=list)
    constraint_sets: dict[int, list[str]] = field(default_factory=dict)

    def add(self, level, constraint, lhs, rhs, relation, satisfied):
        self.records.append(SynthRecord(level, constraint, lhs, rhs, relation, bool(satisfied)))
        return satisfied

    @property
    def all_satisfied(self) -> bool:
        return all(r.satisfied for r in self.records)

    def failures(self) -> list[SynthRecord]:
        return [r for r in self.records if not r.satisfied]


@dataclass
class ParamSequences:
    a_seq: list[Rational]
    b_seq: list[Rational]
    m_seq: list[int] = field(default_factory=list)
    q_seq: list[int] = field(default_factory=list)
    C_seq: list[Rational] = field(default_factory=list)
    epsilon_seq: list[Rational] = field(default_factory=list)


@dataclass(frozen=True)
class StageParams:
    alpha: Rational
    alpha_bar: Rational
    beta: Rational
    eps: Rational


# ------------------------------------------------------------------ sequences


def default_b_seq(a, b, n: int) -> list[Rational]:
    """b_k = b - (b - L)/2**k, with L = 1/a when b > 1/a (so b_1 > 1/a) and 0 otherwise."""
    a, b = Q(a), Q(b)
    low = 1 / a if b > 1 / a else mpq(0)
    return [b - (b - low) / mpq(2) ** k for k in range(1, n + 1)]


def validate_appropriate(a_seq: Sequence, b_seq: Sequence, a, b) -> Optional[str]:
    """None when the finite prefixes are appropriate, else the first violated clause."""
    a, b = Q(a), Q(b)
    if not a_seq or not b_seq:
        raise ValueError("sequences must be nonempty")
    if a < 2:
        return "limit a must be >= 2"
    if b > 2 / a:
        return "limit b must be <= 2/a"
    for k, ak in enumerate(a_seq, 1):
        if ak < 1:
            return f"a_{k} = {fmt(ak)} < 1"
        if ak > a:
            return f"a_{k} = {fmt(ak)} exceeds the limit a = {fmt(a)}"
        if k > 1 and a_seq[k - 2] > ak:
            return f"a_seq not non-decreasing at k={k - 1},{k}"
    for k, bk in enumerate(b_seq, 1):
        if bk > b:
            return f"b_{k} = {fmt(bk)} exceeds the limit b = {fmt(b)}"
        if k > 1 and not b_seq[k - 2] < bk:
            return f"b_seq not strictly increasing at k={k - 1},{k}"
    if 1 / a < b and not 1 / a < b_seq[0]:
        return f"if 1/a<b then 1/a<b_1 violated: b_1 = {fmt(b_seq[0])} <= 1/a = {fmt(1 / a)}"
    return None


def synth_stage_rationals(s: int, a, b, prior: StageParams) -> StageParams:
    """Next (alpha, alpha_bar, beta, eps) by repeated midpoints toward a and b."""
    a, b = Q(a), Q(b)
    if b == 0:
        raise ValueError("b = 0 is the singleton case; no stage rationals exist")
    p = prior
    if not (p.alpha < a < p.alpha_bar):
        raise InvariantError(f"stage {s}: need alpha < a < alpha_bar")
    if not (0 < p.beta and 0 < p.eps and p.beta + p.eps < b):
        raise InvariantError(f"stage {s}: need 0 < beta, 0 < eps, beta + eps < b")
    bound = mpq(1, s + 1)
    alpha, alpha_bar = (p.alpha + a) / 2, (p.alpha_bar + a) / 2
    while alpha_bar - alpha >= bound:
        alpha, alpha_bar = (alpha + a) / 2, (alpha_bar + a) / 2
    beta = (p.beta + p.eps + b) / 2
    while b - beta >= bound:
        beta = (beta + b) / 2
    return StageParams(alpha, alpha_bar, beta, (b - beta) / 2)


# ------------------------------------------------------------- C constants


def _ln_hi(m) -> Rational:
    return ln_enclosure(m)[1]


def constant_C(level: int, family: str, seqs: ParamSequences, a, precision: int = DEFAULT_PRECISION) -> Rational:
    """Upper bound for the level constant C multiplying m_level**(...) in the q inequality.

    Depends only on m_1..m_{level-1}, q_2..q_{level-1} and a_1..a_{level-1};
    every irrational factor is replaced by a rational upper bound.
    """
    j = level
    m, q, av = seqs.m_seq, seqs.q_seq, seqs.a_seq
    if family in ("E", "EJ"):
        if j == 1:
            # 4 from the covering count, 2 from i_1 = floor((m_1 - 1)/q_1) >= m_1/(2 q_1)
            return mpq(8)
        C = mpq(4) * pow_enclosure(m[0], av[0], precision)[1]
        for i in range(2, j):
            C *= q[i - 1] * pow_enclosure(m[i - 1], av[i - 1] - 1, precision)[1]
        return C
    if family == "F":
        C = 8 * pow_enclosure(2, (j + 1) * (Q(a) + 1), precision)[1]
        if j >= 2:
            C *= pow_enclosure(m[0], av[0], precision)[1]
        for i in range(2, j):
            C *= q[i - 1] * _ln_hi(m[i - 1]) * pow_enclosure(m[i - 1], av[i - 1] - 2, precision)[1]
        return C
    if family == "G":
        if j == 1:
            return mpq(24)
        C = mpq(6 * 2**j) * m[0]
        for i in range(2, j):
            C *= q[i - 1]
        return C
    raise ValueError(family)


# ------------------------------------------------------------------- q_k


def _largest_below_root(num: mpz, den: mpz, v: int) -> tuple[mpz, bool]:
    """(largest integer n < (num/den)**(1/v)... as floor, exactness flag)."""
    r, _ = gmpy2.iroot(num // den, v)
    return r, r**v * den == num


def _largest_q_below(Y_num: mpz, Y_den: mpz, v: int) -> mpz:
    """Largest integer q with q < (Y_num/Y_den)**(1/v)."""
    r, exact = _largest_below_root(Y_num, Y_den, v)
    return r - 1 if exact else r


def window_exponents(family: str, a_k, b1, b2):
    a_k, b1, b2 = Q(a_k), Q(b1), Q(b2)
    if family in ("E", "EJ"):
        return a_k * b1 - 1, a_k * b2 - 1
    if family == "F":
        return a_k * b1 - 2, a_k * b2 - 2
    if family == "G":
        return 2 * b1 - 1, 2 * b2 - 1
    raise ValueError(family)


def synth_q(k: int, m_k: int, a_k, b_next, b_next2, C, family: str, *, precision: int = DEFAULT_PRECISION,
            prime_ceiling: int | None = None) -> int:
    """Largest q with C*m**e < 1/q (E), C*ln(m)*m**e < 1/q (F) or 2*C*m**e < 1/q (G)."""
    C = Q(C)
    m = mpz(m_k)
    e1, _ = window_exponents(family, a_k, b_next, b_next2)
    if e1 >= 0:
        raise TooSmallError(
            f"level {k}: exponent {fmt(e1)} of m_k is not negative, so no q_k >= 1 satisfies the lower window"
        )
    u, v = int((-e1).numerator), int((-e1).denominator)
    if family == "G":
        C = 2 * C
    if family in ("E", "EJ", "G"):
        # q < m**(u/v) / C  <=>  q**v < m**u * Cd**v / Cn**v
        q = _largest_q_below(m**u * C.denominator**v, C.numerator**v, v)
    else:
        # relative accuracy of ln(m) must beat the size of Y
        bits = 80 + int(m.bit_length()) * u // v
        for _ in range(4):
            lo, hi = ln_enclosure(m, bits)
            # Y in [m**(u/v)/(C*hi), m**(u/v)/(C*lo)]
            chi, clo = C * hi, C * lo
            q_lo = _largest_q_below(m**u * chi.denominator**v, chi.numerator**v, v)
            q_hi = _largest_q_below(m**u * clo.denominator**v, clo.numerator**v, v)
            if q_lo == q_hi:
                q = q_lo
                break
            bits *= 2
        else:
            raise CapacityError(f"level {k}: could not separate q_k for the log-weighted window")
    if q < 1:
        raise TooSmallError(f"level {k}: m_k = {m_k} too small: no q_k >= 1 with the lower window strict")
    if q >= m:
        raise TooSmallError(f"level {k}: q_k = {q} is not below m_k = {m_k}")
    if family == "F":
        lower_count, _ = prime_count_bounds(int(m), prime_ceiling)
        if q > lower_count:
            raise TooSmallError(f"level {k}: q_k = {q} exceeds the certified prime count {lower_count} in [m_k, 2m_k)")
    return int(q)


def q_strict_holds(family: str, m, a_k, b_next, C, q) -> bool:
    """Whether the defining strict inequality C*... < 1/q holds (exact or certified)."""
    e1 = window_exponents(family, a_k, b_next, b_next)[0]
    C = Q(C) * (2 if family == "G" else 1)
    if family != "F":
        return compare_product([(C * q, 1), (m, e1)], 1) < 0
    bits = 80 + int(mpz(q).bit_length())
    while True:
        lo, hi = ln_enclosure(m, bits)
        if compare_product([(C * q * hi, 1), (m, e1)], 1) < 0:
            return True
        if compare_product([(C * q * lo, 1), (m, e1)], 1) >= 0:
            return False
        bits *= 2


def check_window(family: str, m, a_k, b_next, b_next2, q) -> tuple[bool, bool]:
    """Exact check of the two-sided 1/q window; returns (lower_ok, upper_ok)."""
    e1, e2 = window_exponents(family, a_k, b_next, b_next2)
    inv_q = mpq(1, q)
    if family in ("E", "EJ"):
        return compare_pow(m, e1, inv_q) <= 0, compare_pow(m, e2, inv_q) >= 0
    if family == "G":
        return compare_product([(2, 1), (m, e1)], inv_q) <= 0, compare_pow(m, e2, inv_q) >= 0
    lo, hi = ln_enclosure(m, 96 + int(mpz(q).bit_length()))
    lower_ok = compare_product([(hi, 1), (m, e1)], inv_q) <= 0
    upper_ok = compare_product([(lo, 1), (m, e2)], inv_q) >= 0
    return lower_ok, upper_ok


def compare_pow(base, e, rhs) -> int:
    return compare_product([(base, e)], rhs)


def window_text(family: str) -> tuple[str, str]:
    if family == "F":
        return "ln(m)*m^(a*b_{k+1}-2) <= 1/q", "1/q <= ln(m)*m^(a*b_{k+2}-2)"
    if family == "G":
        return "2*m^(2*b_{k+1}-1) <= 1/q", "1/q <= m^(2*b_{k+2}-1)"
    return "m^(a*b_{k+1}-1) <= 1/q", "1/q <= m^(a*b_{k+2}-1)"


def _m_str(m) -> str:
    m = mpz(m)
    if m > 1 and (m & (m - 1)) == 0:
        return f"2^{m.bit_length() - 1}"
    if m.bit_length() > 4096:
        return f"<{m.bit_length()}-bit integer>"
    return m.digits(10)


# ---------------------------------------------------------------- growth f


@dataclass
class EffectiveBudget:
    """Bit-budget condition: log2(m) * a * (b - beta) >= prefix_bits."""

    a: Rational
    b: Rational
    beta: Rational
    prefix_bits: int


def _growth_ii(family, m, a_k, b1, b2, C) -> bool:
    x = Q(a_k) * (Q(b2) - Q(b1))
    if family == "G":
        return compare_product([(m, 2 * (Q(b2) - Q(b1)))], 4 * Q(C)) > 0
    if family == "F":
        lo, _ = ln_enclosure(m, 64)
        # 2C < ln(m) m^x, certified with the lower bound of ln(m)
        return compare_product([(lo, 1), (m, x)], 2 * Q(C)) > 0
    return compare_product([(m, x)], 2 * Q(C)) > 0


def growth_f(k: int, m_prev: int | None, seqs: ParamSequences, family: str, a, *,
             C=None, precision: int = DEFAULT_PRECISION, effective: EffectiveBudget | None = None,
             report: SynthReport | None = None, bit_cap: int = DEFAULT_BIT_CAP,
             prime_ceiling: int | None = None, only=None) -> int:
    """Least power of two m_k meeting the assembled constraint list for level k.

    (i) m > m_{k-1}; (ii) 2C < m^(a_k (b_{k+2} - b_{k+1})) (F: times ln m; G: 4C with
    exponent 2(b_{k+2}-b_{k+1})); (iii) q_k from m exists, 1 <= q_k < m and the
    two-sided window holds; (iv) at k = 1, m > 3*2^a and m^(a-1) > 2;
    (v) effective mode only, the bit budget.  ``only`` restricts the list to the
    given tags, e.g. ``only={"iv"}``.
    """
    tags = set(only) if only is not None else {"i", "ii", "iii", "iv", "v"}
    a = Q(a)
    a_k = seqs.a_seq[k - 1]
    b1, b2 = seqs.b_seq[k], seqs.b_seq[k + 1]
    if C is None:
        C = constant_C(k, family, seqs, a, precision)
    e1, _ = window_exponents(family, a_k, b1, b2)
    if e1 >= 0 and "iii" in tags:
        raise CapacityError(
            f"level {k}: window exponent {fmt(e1)} >= 0 so no q_k >= 1 exists; target lies on an "
            f"unsatisfiable boundary for family {family} (use demo mode)"
        )
    t_start = 1 if m_prev is None else int(mpz(m_prev).bit_length())

    def least(pred, t0):
        # exponential then binary search; pred is monotone in t for the constraints used
        lo_t, hi_t, step = t0, max(t0, 1), 1
        while not pred(hi_t):
            lo_t = hi_t + 1
            hi_t += step
            step *= 2
            if hi_t > bit_cap:
                raise CapacityError(f"level {k}: m_k would exceed 2^{bit_cap}; use demo mode")
        while lo_t < hi_t:
            mid = (lo_t + hi_t) // 2
            if pred(mid):
                hi_t = mid
            else:
                lo_t = mid + 1
        return hi_t

    @lru_cache(maxsize=None)
    def checks_at(t):
        rows = _level_constraints(k, mpz(1) << t, m_prev, seqs, family, a, a_k, b1, b2, C,
                                  effective, prime_ceiling, "iii" in tags)
        return [r for r in rows if r[0][1:r[0].index(")")] in tags]

    t = t_start
    if "ii" in tags:
        t = least(lambda t: _growth_ii(family, mpz(1) << t, a_k, b1, b2, C), t)
    if "iii" in tags:
        # the two-sided window alone forces m^x > C (2C for G), x the window-exponent gap
        x = window_exponents(family, a_k, b1, b2)
        C_w = Q(C) * (2 if family == "G" else 1)
        t = least(lambda t: compare_product([(mpz(1) << t, x[1] - x[0])], C_w) > 0, t)
    if effective is not None and "v" in tags:
        x = effective.a * (effective.b - effective.beta)
        t = max(t, int(ceil_q(mpq(effective.prefix_bits) / x)))
    t = least(lambda t: all(c[4] for c in checks_at(t)), t)
    m = mpz(1) << t
    checks = checks_at(t)
    if report is not None:
        report.constraint_sets[k] = [c[0] for c in checks]
        for name, lhs, rhs, rel, ok in checks:
            report.add(k, name, lhs, rhs, rel, ok)
    return int(m)


class _Skip(Exception):
    pass


def _level_constraints(k, m, m_prev, seqs, family, a, a_k, b1, b2, C, effective, prime_ceiling, with_q=True):
    out = []
    ms = _m_str(m)
    if m_prev is not None:
        out.append(("(i) m_k > m_{k-1}", ms, _m_str(m_prev), ">", m > m_prev))
        if family == "G":
            out.append(("(i) m_{k-1} divides m_k", ms, _m_str(m_prev), "|", m % m_prev == 0))
    x = (2 if family == "G" else Q(a_k)) * (Q(b2) - Q(b1))
    lhs = "4*C" if family == "G" else "2*C"
    rhs = f"{'ln(m)*' if family == 'F' else ''}({ms})^({fmt(x)})"
    out.append(("(ii) growth", f"{lhs} with C={fmt(C)}", rhs, "<", _growth_ii(family, m, a_k, b1, b2, C)))
    try:
        if not with_q:
            raise _Skip
        q = synth_q(k, m, a_k, b1, b2, C, family, prime_ceiling=prime_ceiling)
        lo_ok, up_ok = check_window(family, m, a_k, b1, b2, q)
        lo_txt, up_txt = window_text(family)
        out.append(("(iii) q_k exists, 1 <= q_k < m_k", _m_str(q), ms, "in", True))
        out.append((f"(iii) lower window {lo_txt}", f"m={ms}, b_{{k+1}}={fmt(b1)}", f"q={_m_str(q)}", "<=", lo_ok))
        out.append((f"(iii) upper window {up_txt}", f"q={_m_str(q)}", f"m={ms}, b_{{k+2}}={fmt(b2)}", "<=", up_ok))
    except _Skip:
        pass
    except TooSmallError as exc:
        out.append(("(iii) q_k exists, 1 <= q_k < m_k", str(exc), ms, "in", False))
    if k == 1:
        out.append(("(iv) m_1 > 3*2^a", ms, f"3*2^({fmt(a)})", ">", compare_product([(2, a)], mpq(m, 3)) < 0))
        out.append(("(iv) 1/m_1 > 2*m_1^(-a)", f"({ms})^({fmt(a_k - 1)})", "2", ">",
                    compare_product([(m, a_k - 1)], 2) > 0))
    if effective is not None:
        x = effective.a * (effective.b - effective.beta)
        t = int(m.bit_length() - 1)
        out.append(("(v) bit budget log2(m)*a*(b-beta) >= prefix bits", f"{t}*{fmt(x)}",
                    str(effective.prefix_bits), ">=", t * x >= effective.prefix_bits))
    return out


# --------------------------------------------------------------- synthesize


def synthesize(target: TargetSpec, *, demo_m: Sequence[int] | None = None, demo_q: Sequence[int] | None = None,
               b_seq: Sequence | None = None, a_seq: Sequence | None = None,
               precision: int = DEFAULT_PRECISION, prime_ceiling: int | None = None,
               bit_cap: int = DEFAULT_BIT_CAP) -> tuple[ParamSequences, SynthReport]:
    """Build a_k, b_k, m_k, q_k for ``target``.

    Strict mode enforces every constraint; demo mode takes m_k (and optionally
    q_k) from the caller and only records the constraints.
    """
    K = target.depth
    a, b = target.a, target.b
    if b == 0:
        raise ConfigError("b = 0 is the singleton-set case; there is no sequence to synthesize")
    a_seq = [Q(x) for x in a_seq] if a_seq is not None else [a] * K
    b_seq = [Q(x) for x in b_seq] if b_seq is not None else default_b_seq(a, b, K + 2)
    if len(a_seq) < K or len(b_seq) < K + 2:
        raise ConfigError("need a_1..a_K and b_1..b_{K+2}")
    problem = validate_appropriate(a_seq, b_seq, a, b)
    if problem and target.mode == "strict":
        raise ConfigError(f"sequences are not appropriate: {problem}")
    seqs = ParamSequences(a_seq=a_seq, b_seq=b_seq)
    report = SynthReport()
    if problem:
        report.add(0, "appropriate sequences", problem, "", "ok", False)
    family = "E" if target.family == "EJ" else target.family
    for k in range(1, K + 1):
        C = constant_C(k, family, seqs, a, precision)
        a_k, b1, b2 = a_seq[k - 1], b_seq[k], b_seq[k + 1]
        m_prev = seqs.m_seq[-1] if seqs.m_seq else None
        if target.mode == "strict":
            m = growth_f(k, m_prev, seqs, family, a, C=C, precision=precision, report=report,
                         bit_cap=bit_cap, prime_ceiling=prime_ceiling)
            q = synth_q(k, m, a_k, b1, b2, C, family, precision=precision, prime_ceiling=prime_ceiling)
        else:
            if demo_m is None or len(demo_m) < k:
                raise ConfigError("demo mode needs an explicit m_k for every level")
            m = int(demo_m[k - 1])
            checks = _level_constraints(k, mpz(m), None if m_prev is None else mpz(m_prev), seqs, family, a,
                                        a_k, b1, b2, C, None, prime_ceiling)
            report.constraint_sets[k] = [c[0] for c in checks]
            for name, lhs, rhs, rel, ok in checks:
                report.add(k, name, lhs, rhs, rel, ok)
            if demo_q is not None:
                q = int(demo_q[k - 1])
            else:
                q = synth_q(k, m, a_k, b1, b2, C, family, precision=precision, prime_ceiling=prime_ceiling)
        seqs.m_seq.append(int(m))
        seqs.q_seq.append(int(q))
        seqs.C_seq.append(C)
        seqs.epsilon_seq.append(b2 - b_seq[k - 1])
        _record_scale_windows(report, k, family, seqs, a, precision)
    return seqs, report


def _record_scale_windows(report, k, family, seqs, a, precision):
    """Both readings of the first-bullet scale window (exponent a_k vs the limit a)."""
    if family != "E":
        return
    m, q = seqs.m_seq[k - 1], seqs.q_seq[k - 1]
    for label, ex in (("a_k reading", seqs.a_seq[k - 1]), ("limit-a reading", Q(a))):
        w = mpq(q, m) - 2 * pow_enclosure(m, -ex, precision)[1]
        report.add(k, f"scale window q_k/m_k - 2/m_k^a ({label})", fmt(w) if w.numerator.bit_length() < 4096
                   else f"~2^{int(w.numerator.bit_length()) - int(w.denominator.bit_length())}", "0", ">", w > 0)
