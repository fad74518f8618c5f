"""Strict synthesis at depth 3 for families E, F, G with q-window and q-maximality checks."""
import argparse
import time

from jarnik.exact import Q, fmt
from jarnik.sequences import TargetSpec, check_window, q_strict_holds, synthesize

DEFAULTS = {"E": ("3", "1/5"), "F": ("3", "1/2"), "G": ("2", "1/2")}


def _short(x):
    x = Q(x)
    return fmt(x) if x.numerator.bit_length() < 64 else f"~2^{x.numerator.bit_length() - x.denominator.bit_length()}"


def run(family, a, b, depth):
    t = time.perf_counter()
    seqs, rep = synthesize(TargetSpec(Q(a), Q(b), family, depth))
    print(f"[{family}] a={a} b={b} all constraints: {rep.all_satisfied} ({time.perf_counter() - t:.2f}s)")
    for k in range(1, depth + 1):
        m, q, a_k = seqs.m_seq[k - 1], seqs.q_seq[k - 1], seqs.a_seq[k - 1]
        b1, b2, C = seqs.b_seq[k], seqs.b_seq[k + 1], seqs.C_seq[k - 1]
        lower, upper = check_window(family, m, a_k, b1, b2, q)
        maximal = q_strict_holds(family, m, a_k, b1, C, q) and not q_strict_holds(family, m, a_k, b1, C, q + 1)
        print(f"  k={k} m_bits={m.bit_length()} q_bits={q.bit_length()} C={_short(C)} "
              f"window=({lower}, {upper}) q_maximal={maximal}")
    for r in rep.failures():
        print(f"  FAILED {r.constraint}: {r.lhs} {r.relation} {r.rhs}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("families", nargs="*", default=["E", "F", "G"])
    ap.add_argument("--depth", type=int, default=3)
    args = ap.parse_args()
    for fam in args.families:
        run(fam, *DEFAULTS[fam], args.depth)


if __name__ == "__main__":
    main()
