"""Distinguished-path selection through the tree of fractals, and code-length witnesses.

J is the union tree (every residue kept); a branch S pins the selector h_j at the
levels it covers.  All measures here are mu_J masses: (number of level-k intervals)
times the level-k unit mass of J.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional, Sequence

from gmpy2 import mpq, mpz

from .errors import CapacityError, ConfigError, InvariantError, UndecidedError
from .exact import DEFAULT_PRECISION, Q, Rational, compare_product, fmt
from .families import PROGRESSION, Construction, build_construction, selector_space
from .measure import (BSetSpec, b_set_cover_measure, b_set_endpoints, b_set_enumerate, choose_d,
                      count_meeting_union, tail_sum_bound)
from .sequences import StageParams, synth_stage_rationals

MAX_SUBSTAGES = 16
MAX_CANDIDATES = 4096


@dataclass
class PathState:
    s: int
    k: int  # committed depth k_s
    d: int
    prefix: tuple  # selectors of levels 1..k
    mu_E: Rational
    ell: int = 0  # level cursor (effective mode)
    params: Optional[StageParams] = None

    def to_record(self) -> dict:
        rec = {"s": self.s, "k": self.k, "d": self.d, "prefix": list(self.prefix), "mu_E": fmt(self.mu_E),
               "ell": self.ell}
        if self.params is not None:
            p = self.params
            rec.update(alpha=fmt(p.alpha), alpha_bar=fmt(p.alpha_bar), beta=fmt(p.beta), eps=fmt(p.eps))
        return rec


@dataclass
class TestValue:
    name: str
    lhs: Rational  # certified upper bound on the measured quantity
    rhs: Rational
    passed: bool
    d_star: Optional[int] = None
    finite: Optional[Rational] = None
    tail: Optional[Rational] = None

    def to_record(self) -> dict:
        rec = {"name": self.name, "lhs": fmt(self.lhs), "rhs": fmt(self.rhs), "pass": self.passed}
        if self.d_star is not None:
            rec.update(d_star=self.d_star, finite=fmt(self.finite), tail=fmt(self.tail))
        return rec


@dataclass
class CandidateEval:
    selectors: tuple
    k: int
    mu_S: Rational
    tests: list

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.tests)

    def to_record(self) -> dict:
        return {"selectors": list(self.selectors), "k": self.k, "mu_S": fmt(self.mu_S), "pass": self.passed,
                "tests": [t.to_record() for t in self.tests]}


@dataclass
class StageRecord:
    mode: str
    s: int  # the stage being built (s+1 in the recursion)
    d_prev: int
    d_next: int
    k_prev: int
    k_next: Optional[int]
    c: Optional[int]
    evaluations: list = field(default_factory=list)
    chosen: Optional[CandidateEval] = None
    certificate: Optional[TestValue] = None
    notices: list = field(default_factory=list)
    ell: Optional[int] = None

    def fail_fractions(self) -> dict:
        n = len(self.evaluations)
        if not n:
            return {}
        out = {}
        for i, t in enumerate(self.evaluations[0].tests):
            bad = sum(1 for e in self.evaluations if not e.tests[i].passed)
            out[t.name] = mpq(bad, n)
        return out

    def to_record(self) -> dict:
        return {"kind": "stage", "mode": self.mode, "s": self.s, "d_prev": self.d_prev, "d_next": self.d_next,
                "k_prev": self.k_prev, "k_next": self.k_next, "c": self.c, "ell": self.ell,
                "candidates": len(self.evaluations),
                "fail_fractions": {k: fmt(v) for k, v in self.fail_fractions().items()},
                "chosen": None if self.chosen is None else self.chosen.to_record(),
                "certificate": None if self.certificate is None else self.certificate.to_record(),
                "notices": self.notices}


# ----------------------------------------------------------------- helpers


def _require_progression(J: Construction):
    if J.family not in PROGRESSION:
        raise ConfigError(f"path selection is implemented for families E and G, not {J.family}")


def candidate_branches(J: Construction, k_from: int, k_to: int, *, cap: int = MAX_CANDIDATES,
                       mode: str = "demo", notices: Optional[list] = None) -> list[tuple]:
    """Every selector tuple for levels k_from+1..k_to, in lexicographic order."""
    spaces = [selector_space(J.level(j)) for j in range(k_from + 1, k_to + 1)]
    total = 1
    for sp in spaces:
        total *= len(sp)
    if total > cap:
        if mode == "strict":
            raise CapacityError(f"{total} branch extensions exceed the candidate cap {cap}; use demo mode")
        if notices is not None:
            notices.append(f"candidate set capped at {cap} of {total}")
        out = []
        for t in product(*spaces):
            out.append(tuple(t))
            if len(out) == cap:
                break
        return out
    return [tuple(t) for t in product(*spaces)]


def branch_tree(J: Construction, selectors: Sequence) -> Construction:
    return J.with_selectors(list(selectors))


def branch_mass(J: Construction, T: Construction, k: int) -> Rational:
    return T.count(k) * J.mass(k)


def _decide(name, finite, tail_fn, threshold, d_star, escalations: int = 2) -> TestValue:
    """finite + tail < threshold, escalating the tail enclosure width when the answer is unclear."""
    width = mpq(1, 1 << 20)
    for _ in range(escalations + 1):
        lo, hi = tail_fn(width)
        if finite + hi < threshold:
            return TestValue(name, finite + hi, threshold, True, d_star, finite, hi)
        if finite + lo >= threshold:
            return TestValue(name, finite + hi, threshold, False, d_star, finite, hi)
        width /= 1 << 8
    raise UndecidedError(f"{name}: tail enclosure too wide to decide against {fmt(threshold)}")


def split_cover_test(name: str, J: Construction, T: Construction, level: int, d_lo: int, alpha, threshold,
                     *, tail_alpha=None, d_star: Optional[int] = None) -> TestValue:
    """mu_J(B(d_lo, inf, alpha) cap T) < threshold, split as a finite cover up to d* - 1 plus the tail at d*."""
    alpha = Q(alpha)
    tail_alpha = alpha if tail_alpha is None else Q(tail_alpha)
    if d_star is None:
        d_star = choose_d(threshold / 2, tail_alpha, start=d_lo)
    finite = mpq(0)
    if d_star - 1 >= d_lo:
        finite = b_set_cover_measure(T, level, BSetSpec(d_lo, d_star - 1, alpha), mass_tree=J)
    return _decide(name, finite, lambda w: tail_sum_bound(d_star, tail_alpha, w), threshold, d_star)


def endpoint_test(name: str, J: Construction, T: Construction, k: int, bset, threshold) -> TestValue:
    pts = b_set_endpoints(bset)
    val = count_meeting_union(T, pts, k) * J.mass(k) if pts else mpq(0)
    return TestValue(name, val, threshold, val < threshold)


# --------------------------------------------------------------- classical


def classical_init(J: Construction, a) -> PathState:
    """Stage 1: E = [0, 1] (depth 0), d_1 least with the tail bound below 1/2 at exponent a + 1/2."""
    _require_progression(J)
    d1 = choose_d(mpq(1, 2), Q(a) + mpq(1, 2), start=2)
    return PathState(s=1, k=0, d=d1, prefix=(), mu_E=mpq(1))


def bad_fraction_tests(J: Construction, state: PathState, cand: tuple, k: int, d_next: int, a,
                       bset_mid) -> CandidateEval:
    s = state.s
    a = Q(a)
    al_s, al_n = a + mpq(1, 1 << s), a + mpq(1, 1 << (s + 1))
    T = branch_tree(J, state.prefix + cand)
    mu_S = branch_mass(J, T, k)
    # test1 splits at d_(s+1), so the enumerated B(d_s, d_(s+1) - 1) is covered exactly;
    # test2 splits at the least d* > d_(s+1) whose tail uses at most half the threshold
    t1 = split_cover_test("test1", J, T, k, state.d, al_s, 4 * mu_S / (1 << s), d_star=d_next)
    thr2 = mu_S / (1 << (s + 1))
    t2 = split_cover_test("test2", J, T, k, d_next, al_n, thr2, d_star=choose_d(thr2 / 2, al_n, start=d_next + 1))
    t3 = endpoint_test("test3", J, T, k, bset_mid, mu_S / (1 << s))
    return CandidateEval(cand, k, mu_S, [t1, t2, t3])


def select_branch(cands: Sequence[tuple], evaluate: Callable[[tuple], CandidateEval]):
    """First passer in lexicographic order (None if no passer), plus the evaluations made."""
    evals = []
    for c in sorted(cands):
        e = evaluate(c)
        evals.append(e)
        if e.passed:
            return e, evals
    return None, evals


def classical_stage(J: Construction, state: PathState, a, *, cap: int = MAX_CANDIDATES, mode: str = "demo",
                    exhaustive: bool = True) -> tuple[Optional[PathState], StageRecord]:
    """One stage of the classical recursion; returns (next state or None, record)."""
    _require_progression(J)
    a = Q(a)
    s = state.s
    al_s, al_n = a + mpq(1, 1 << s), a + mpq(1, 1 << (s + 1))
    d_next = choose_d(state.mu_E / (4 * (1 << (s + 1))), al_n, start=state.d + 1)
    spec = BSetSpec(state.d, d_next, al_s)
    c = spec.count()
    k_next = None
    for k in range(state.k + 1, J.depth + 1):
        if 2 * c * J.mass(k) < state.mu_E / (4 * (1 << s)):
            k_next = k
            break
    rec = StageRecord("classical", s + 1, state.d, d_next, state.k, k_next, c)
    if k_next is None:
        raise CapacityError(f"stage {s + 1}: no level up to depth {J.depth} makes 2c*mu_J(level) small enough; "
                            "deepen the construction")
    bset_mid = b_set_enumerate(spec)
    cands = candidate_branches(J, state.k, k_next, cap=cap, mode=mode, notices=rec.notices)
    ev = lambda cand: bad_fraction_tests(J, state, cand, k_next, d_next, a, bset_mid)
    if exhaustive:
        rec.evaluations = [ev(cnd) for cnd in sorted(cands)]
        chosen = next((e for e in rec.evaluations if e.passed), None)
    else:
        chosen, rec.evaluations = select_branch(cands, ev)
    if chosen is None:
        rec.notices.append("no candidate passed all three tests" +
                           ("; demo constants may void the one-fourth counting argument" if mode == "demo" else ""))
        return None, rec
    rec.chosen = chosen
    rec.certificate = chosen.tests[1]
    nxt = PathState(s + 1, k_next, d_next, state.prefix + chosen.selectors, chosen.mu_S)
    return nxt, rec


def recompute_certificate(J: Construction, state: PathState, a) -> TestValue:
    """From scratch: mu_J(B(d_s, inf, a + 2^-s) cap E_k) < mu_J(E_k)/2^s for a committed classical state."""
    a = Q(a)
    T = branch_tree(J, state.prefix)
    mu_S = branch_mass(J, T, state.k)
    al, thr = a + mpq(1, 1 << state.s), mu_S / (1 << state.s)
    return split_cover_test("test2", J, T, state.k, state.d, al, thr, d_star=choose_d(thr / 2, al, start=state.d + 1))


def run_classical(J: Construction, a, stages: int, *, cap: int = MAX_CANDIDATES, mode: str = "demo",
                  exhaustive: bool = True) -> tuple[list[PathState], list[StageRecord]]:
    states = [classical_init(J, a)]
    records = []
    for _ in range(stages):
        nxt, rec = classical_stage(J, states[-1], a, cap=cap, mode=mode, exhaustive=exhaustive)
        records.append(rec)
        if nxt is None:
            break
        states.append(nxt)
    return states, records


# --------------------------------------------------------------- effective


@dataclass
class EffectiveSetup:
    """Demo-scale inputs: m_l and q_l per level (strict growth is out of reach for enumeration)."""
    a: Rational
    b: Rational
    family: str
    m_list: list
    q_list: list
    precision: int = DEFAULT_PRECISION


def validate_initial(a, b, p: StageParams):
    a, b = Q(a), Q(b)
    if not 0 < p.beta < b:
        raise ConfigError("need 0 < beta_0 < b")
    if not (p.eps > 0 and p.beta + p.eps < b):
        raise ConfigError("need eps_0 > 0 and beta_0 + eps_0 < b")
    if not p.alpha < a < p.alpha_bar:
        raise ConfigError("need alpha_0 < a < alpha_bar_0")
    if not p.alpha_bar - p.alpha < 1:
        raise ConfigError("need alpha_bar_0 - alpha_0 < 1")
    if not p.alpha_bar > 2:
        raise ConfigError("need alpha_bar_0 > 2 for the tail sum to converge")


def substage_b(p: StageParams, ell: int, ell_s: int) -> Rational:
    """b_(ell+2) = beta + eps (1 - 1/2^(ell - ell_s))."""
    return p.beta + p.eps * (1 - mpq(1, 1 << (ell - ell_s)))


def level_gap(J: Construction, ell: int, alpha) -> Rational:
    """q/m - 2/m^alpha with m^-alpha rounded up (a lower bound on the gap)."""
    from .exact import pow_enclosure
    L = J.level(ell)
    return mpq(L.q, L.m) - 2 * pow_enclosure(L.m, -Q(alpha))[1]


def _least_d(budget, alpha_tail, start: int, gap, alpha_gap) -> int:
    d = choose_d(budget, alpha_tail, start=start)
    while not compare_product([(2, 1), (d, -Q(alpha_gap))], gap) < 0:
        d += 1
    return d


def effective_init(setup: EffectiveSetup, p0: StageParams) -> tuple[PathState, Construction, list]:
    validate_initial(setup.a, setup.b, p0)
    J = build_construction(setup.family, setup.m_list[:1], [p0.alpha], setup.q_list[:1],
                           precision=setup.precision)
    _require_progression(J)
    # the gap here uses the construction exponent alpha_0 (see the ledger)
    g1 = level_gap(J, 1, p0.alpha)
    if g1 <= 0:
        raise ConfigError("g_1 = q_1/m_1 - 2/m_1^alpha_0 must be positive")
    d0 = _least_d(mpq(1, 2), p0.alpha_bar, 2, g1, p0.alpha)
    b_seq = [p0.beta + p0.eps * (1 - mpq(1, 1 << n)) for n in (1, 2, 3)]
    return PathState(s=0, k=0, d=d0, prefix=(), mu_E=mpq(1), ell=1, params=p0), J, b_seq


def termination_tests(J: Construction, state: PathState, p_next: StageParams, d_next: int, cand: tuple,
                      k: int, ell: int, bset_end) -> CandidateEval:
    s = state.s
    T = branch_tree(J, state.prefix + cand)
    mu_S = branch_mass(J, T, k)
    ab_s, ab_n = state.params.alpha_bar, p_next.alpha_bar

    def bullet(name, d_lo, alpha, thr_base, within_S):
        best = None
        for d_star in range(d_lo + 1, d_lo + ell):
            lo, hi = tail_sum_bound(d_star, ab_n)
            thr = thr_base - hi
            tree = T if within_S else J
            val = b_set_cover_measure(tree, ell, BSetSpec(d_lo, d_star, alpha), mass_tree=J)
            tv = TestValue(name, val, thr, val < thr, d_star, val, hi)
            if tv.passed:
                return tv
            if best is None or val - thr < best.lhs - best.rhs:
                best = tv
        return best or TestValue(name, mpq(1), mpq(0), False)

    b1 = bullet("bullet1", state.d, ab_s, 4 * mu_S / (1 << s), True)
    b2 = bullet("bullet2", d_next, ab_n, 4 * mu_S / (1 << (s + 1)), True)
    b3 = endpoint_test("bullet3", J, T, k, bset_end, mu_S / (1 << (s + 1)))
    return CandidateEval(cand, k, mu_S, [b1, b2, b3])


def effective_stage(setup: EffectiveSetup, state: PathState, J: Construction, b_seq: list, *,
                    max_substages: int = MAX_SUBSTAGES, cap: int = MAX_CANDIDATES, mode: str = "demo",
                    exhaustive: bool = True):
    """Run substages until some (k, S) meets all three termination bullets.

    Returns (next state or None, extended J, extended b_seq, record).
    """
    a, b = Q(setup.a), Q(setup.b)
    s = state.s
    p_next = synth_stage_rationals(s, a, b, state.params)
    g = level_gap(J, state.ell, state.params.alpha_bar)
    if g <= 0:
        raise InvariantError(f"stage {s + 1}: gap at level {state.ell} is not positive")
    d_next = _least_d(state.mu_E / (4 * (1 << (s + 1))), p_next.alpha_bar, state.d + 1, g, p_next.alpha_bar)
    rec = StageRecord("effective", s + 1, state.d, d_next, state.k, None, None)
    bset_end = b_set_enumerate(BSetSpec(state.d, d_next, p_next.alpha_bar))
    b_seq = list(b_seq)
    n_evals = 0
    for ell in range(state.ell + 1, state.ell + 1 + max_substages):
        if ell > len(setup.m_list):
            rec.notices.append(f"demo m list exhausted at substage {ell}")
            break
        b_seq.append(substage_b(p_next, ell, state.ell))
        from .families import extend
        J = extend(J, setup.m_list[ell - 1], p_next.alpha, setup.q_list[ell - 1], precision=setup.precision)
        rec.ell = ell
        found = None
        for k in range(max(state.k + 1, state.ell), ell + 1):
            cands = candidate_branches(J, state.k, k, cap=cap, mode=mode, notices=rec.notices)
            for cand in sorted(cands):
                n_evals += 1
                if n_evals > cap:
                    raise CapacityError(f"stage {s + 1}: more than {cap} candidate evaluations")
                e = termination_tests(J, state, p_next, d_next, cand, k, ell, bset_end)
                rec.evaluations.append(e)
                if e.passed and found is None:
                    found = e
                    if not exhaustive:
                        break
            if found is not None and not exhaustive:
                break
        if found is not None:
            rec.chosen, rec.k_next = found, found.k
            nxt = PathState(s + 1, found.k, d_next, state.prefix + found.selectors, found.mu_S, ell, p_next)
            return nxt, J, b_seq, rec
    rec.notices.append("substage budget exhausted before termination")
    if rec.evaluations:
        closest = min(rec.evaluations, key=lambda e: sum(1 for t in e.tests if not t.passed))
        rec.notices.append(f"closest candidate {list(closest.selectors)} at k={closest.k}")
    return None, J, b_seq, rec


# ----------------------------------------------------------------- witness


def _elias_gamma_bits(n: int) -> int:
    n = int(n)
    return 2 * (max(1, n).bit_length()) - 1


def _selector_bits(L) -> int:
    sel = L.selector
    if isinstance(sel, tuple):  # family F: the positions of H_j inside the prime pool
        pos = {p: i for i, p in enumerate(L.pool)}
        return sum(_elias_gamma_bits(pos[p] + 1) for p in sel)
    return _elias_gamma_bits((sel or 0) + 1)


def prefix_description_bits(C: Construction, ell: int, rationals: Sequence, *, explicit_levels: bool) -> int:
    """Bits describing everything before the level-ell index, each integer Elias-gamma coded.

    Always: ell, the stage rationals and the selectors h_j (j < ell).  Strict constructions
    recompute m_j and q_j from those, so only demo runs pay for them explicitly.
    """
    bits = _elias_gamma_bits(ell)
    for j in range(1, ell + 1):
        L = C.level(j)
        if explicit_levels:
            bits += _elias_gamma_bits(L.m) + _elias_gamma_bits(L.q)
        if j < ell:
            bits += _selector_bits(L)
    for r in rationals:
        r = Q(r)
        bits += _elias_gamma_bits(abs(r.numerator) + 1) + _elias_gamma_bits(r.denominator)
    return bits


def _ceil_log2_pow(m: int, e) -> int:
    """Least integer B with 2^B >= m^e (e rational > 0), exactly."""
    e = Q(e)
    est = int((mpz(m).bit_length() * e.numerator) // e.denominator) + 1
    B = max(0, est)
    while B > 0 and compare_product([(m, e)], mpz(2) ** (B - 1)) <= 0:
        B -= 1
    while compare_product([(m, e)], mpz(2) ** B) > 0:
        B += 1
    return B


@dataclass
class WitnessRecord:
    ell: int
    N: int
    L: int
    budget: int
    passed: bool
    chain_ok: bool  # m/q < m^(a (b + eps)), exactly
    prefix_bits: int
    total_bits: int
    total_budget_ok: bool  # prefix + index + 1 <= a log2(m) b
    certifying: bool

    def to_record(self) -> dict:
        return {"kind": "witness", "ell": self.ell, "N": mpz(self.N).digits(10), "L": self.L, "budget": self.budget,
                "pass": self.passed, "chain_ok": self.chain_ok, "prefix_bits": self.prefix_bits,
                "total_bits": self.total_bits, "total_budget_ok": self.total_budget_ok,
                "certifying": self.certifying}


def code_length_witness(C: Construction, ell: int, b_ell, eps_ell, b, *, certifying: bool = True,
                        rationals: Sequence = ()) -> WitnessRecord:
    """L = ceil(log2 N_ell) against ceil(a_ell log2(m_ell) (b_ell + eps_ell)), exactly."""
    L_ = C.level(ell)
    N = C.count(ell)
    L = int(mpz(N - 1).bit_length()) if N > 1 else 0
    e = L_.a_k * (Q(b_ell) + Q(eps_ell))
    budget = _ceil_log2_pow(L_.m, e)
    chain_ok = compare_product([(L_.m, 1 - e)], L_.q) < 0
    prefix = prefix_description_bits(C, ell, rationals, explicit_levels=not certifying)
    total = prefix + L + 1
    total_ok = compare_product([(L_.m, L_.a_k * Q(b))], mpz(2) ** total) >= 0
    return WitnessRecord(ell, N, L, budget, L <= budget, chain_ok, prefix, total, total_ok, certifying)
