"""Tail-sum enclosures against a direct partial sum, and choose_d against a linear scan."""
import argparse

from gmpy2 import mpfr, get_context

from jarnik.exact import Q, fmt
from jarnik.measure import choose_d, tail_sum_bound


def partial_sum(d, alpha_bar, terms):
    get_context().precision = 80
    s = mpfr(0)
    ab = mpfr(alpha_bar.numerator) / alpha_bar.denominator
    for t in range(d, d + terms):
        s += mpfr(2) ** (-ab) * mpfr(t) ** (1 - ab)
    return s


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--terms", type=int, default=10 ** 6)
    args = ap.parse_args()
    for d, ab in ((2, 3), (2, 4)):
        lo, hi = tail_sum_bound(d, Q(ab))
        s = partial_sum(d, Q(ab), args.terms)
        print(f"d={d} alpha_bar={ab}: [{float(lo):.9f}, {float(hi):.9f}] width={float(hi - lo):.3g} "
              f"partial({args.terms})={float(s):.9f} (lower bound on the full sum)")
    d = choose_d(Q(1, 2), Q(3))
    scan = next(n for n in range(1, 100) if tail_sum_bound(n, Q(3))[1] < Q(1, 2))
    print(f"choose_d(1/2, 3) = {d}; linear scan = {scan}")


if __name__ == "__main__":
    main()
