"""Cross-prime gap certificates for K_M(a): every pair from distinct primes is >= 1/(8M^2) apart."""
import argparse
import time

from jarnik.exact import Q, fmt
from jarnik.families import build_K, k_threshold_M

CASES = [(20, "3"), (50, "3"), (100, "5/2")]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--case", action="append", help="M:a, e.g. 100:5/2 (repeatable)")
    args = ap.parse_args()
    cases = [tuple(c.split(":")) for c in args.case] if args.case else CASES
    for M, a in cases:
        M, a = int(M), Q(a)
        route = "threshold" if a > 2 and M >= k_threshold_M(a) else "exhaustive"
        t = time.perf_counter()
        fam = build_K(M, a, route="exhaustive")
        dt = time.perf_counter() - t
        ok = fam.min_cross_gap is None or fam.min_cross_gap >= fam.gap_bound
        print(f"M={M} a={fmt(a)} primes={len(fam.members)} intervals={len(fam)} threshold_route={route == 'threshold'} "
              f"min_gap={fmt(fam.min_cross_gap)} bound={fmt(fam.gap_bound)} ok={ok} {dt:.2f}s")


if __name__ == "__main__":
    main()
