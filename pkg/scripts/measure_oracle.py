"""Recursive mu(I) against brute-force enumeration, and normalization, on the four demo constructions."""
import argparse
import random
import time

from gmpy2 import mpq

from jarnik.demos import demo_construction
from jarnik.exact import Interval
from jarnik.measure import count_meeting, mu, mu_enumerated


def random_query(rng, nodes):
    if rng.random() < 0.5:
        lo = mpq(rng.randrange(10 ** 6), 10 ** 6)
        return Interval(lo, lo + mpq(rng.randrange(1, 10 ** 5), 10 ** 6))
    n = rng.choice(nodes)
    return Interval(n.lo - mpq(rng.randrange(3), 10 ** 9), n.hi + mpq(rng.randrange(3), 10 ** 9))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--queries", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    for fam in ("E", "G", "EJ", "F"):
        t = time.perf_counter()
        C = demo_construction(fam)
        nodes = C.enumerate_level(3)
        bad = sum(mu(C, I, 3) != mu_enumerated(C, I, 3)
                  for I in (random_query(rng, nodes) for _ in range(args.queries)))
        norm = [sum(count_meeting(C, n.interval, k) for n in C.enumerate_level(k)) * C.mass(k) for k in (1, 2, 3)]
        print(f"{fam}: intervals={len(nodes)} mismatches={bad}/{args.queries} "
              f"normalization={[str(x) for x in norm]} {time.perf_counter() - t:.2f}s")


if __name__ == "__main__":
    main()
