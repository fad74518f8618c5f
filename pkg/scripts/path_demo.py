"""Classical and effective path selection on the demo union trees."""
import argparse
import time

from jarnik.demos import classical_demo, effective_demo
from jarnik.exact import fmt
from jarnik.path import effective_init, effective_stage, recompute_certificate, run_classical


def classical(a):
    t = time.perf_counter()
    J = classical_demo(a)
    states, recs = run_classical(J, a, 2)
    for r in recs:
        chosen = r.chosen.selectors if r.chosen else None
        print(f"[classical a={a}] stage {r.s}: d {r.d_prev}->{r.d_next} k {r.k_prev}->{r.k_next} c={r.c} "
              f"candidates={len(r.evaluations)} chosen={chosen} "
              f"fail fractions={ {k: fmt(v) for k, v in r.fail_fractions().items()} }")
        for note in r.notices:
            print("   note:", note)
    for st, r in zip(states[1:], recs):
        same = recompute_certificate(J, st, a).to_record() == r.certificate.to_record()
        print(f"   stage {st.s} certificate recomputes identically: {same}")
    print(f"   {time.perf_counter() - t:.2f}s")


def effective():
    setup, p0 = effective_demo()
    state, J, b_seq = effective_init(setup, p0)
    print(f"[effective] d_0={state.d} b={[fmt(b) for b in b_seq]}")
    nxt, J, b_seq, rec = effective_stage(setup, state, J, b_seq)
    print(f"   committed at ell={rec.ell} k={rec.k_next} S={rec.chosen and rec.chosen.selectors} "
          f"next d={nxt and nxt.d} b={[fmt(b) for b in b_seq]}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a", type=int, action="append", help="classical exponent(s); default 4 and 3")
    args = ap.parse_args()
    for a in args.a or [4, 3]:
        classical(a)
    effective()


if __name__ == "__main__":
    main()
