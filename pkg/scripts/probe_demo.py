"""Irrationality-exponent probes on the depth-4 family E demo, plus the Fibonacci control."""
import argparse
import time

from gmpy2 import mpq

from jarnik.demos import probe_demo
from jarnik.exact import fmt
from jarnik.probe import fibonacci_control, probe_batch


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    t = time.perf_counter()
    C = probe_demo()
    res = probe_batch(C, 4, args.samples, args.seed)
    pairs = [lv for r in res for lv in r.levels]
    scored = [lv for lv in pairs if lv.zeta is not None]
    good = sum(lv.zeta[0] >= 3 - mpq(1, 5) for lv in scored)
    print(f"pairs={len(pairs)} contained={sum(lv.contained for lv in pairs)} "
          f"zeta_lo>=14/5: {good}/{len(scored)} min zeta_lo={float(min(lv.zeta[0] for lv in scored)):.4f} "
          f"{time.perf_counter() - t:.2f}s")
    ctrl = [c for c in fibonacci_control(20) if c.trusted and c.z is not None]
    print("Fibonacci F_20/F_21 trusted convergents (q, z_lo, z_hi):")
    for c in ctrl:
        print(f"  q={c.q} z in [{float(c.z[0]):.4f}, {float(c.z[1]):.4f}]")
    print(f"all trusted z <= 21/10: {all(c.z[1] <= mpq(21, 10) for c in ctrl)}")


if __name__ == "__main__":
    main()
