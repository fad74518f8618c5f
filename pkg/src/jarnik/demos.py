"""Small hand-checked parameter sets shared by tests, scripts and the CLI."""
from __future__ import annotations

from dataclasses import dataclass, field

from .exact import Q, primes_in
from .families import Construction, build_construction
from .path import EffectiveSetup
from .sequences import StageParams

E_M = [30, 270000, 12 * 270000 ** 3]


@dataclass(frozen=True)
class DemoSpec:
    family: str
    m: list
    a: object
    q: list
    selectors: list = field(default_factory=list)

    def build(self) -> Construction:
        K = len(self.m)
        sels = self.selectors or [None] * K
        return build_construction(self.family, self.m, [Q(self.a)] * K, self.q, sels,
                                  provenance={"demo": self.family})


def _f_pool_size(m: int) -> int:
    return len(primes_in(m, 2 * m, closed_lo=True))


def demo_spec(family: str) -> DemoSpec:
    """Depth-3 demos with pairwise disjoint intervals and enumerable level 3."""
    if family == "E":
        return DemoSpec("E", list(E_M), 3, [3, 3, 3], [1, 2, 0])
    if family == "G":
        return DemoSpec("G", [10, 100, 1000], 2, [2, 2, 3], [1, 0, 2])
    if family == "EJ":
        return DemoSpec("EJ", [10, 300, 200000], 3, [1, 1, 1])
    if family == "F":
        return DemoSpec("F", [10, 300, 200000], 3, [2, _f_pool_size(300), _f_pool_size(200000)],
                        [(11, 13), None, None])
    raise KeyError(family)


def demo_construction(family: str) -> Construction:
    return demo_spec(family).build()


def probe_demo() -> Construction:
    """Family E with a_k = 3 at depth 4."""
    m = list(E_M) + [12 * E_M[2] ** 3]
    return build_construction("E", m, [3] * 4, [3] * 4, [1, 2, 0, 1], provenance={"demo": "probe"})


def classical_demo(a: int = 4) -> Construction:
    """Union tree for the two-stage classical path demo."""
    m1 = 128
    m2 = int(28 * m1 ** a / 2) + 1
    return build_construction("E", [m1, m2, int(30 * m2 ** a / 2)], [a] * 3, [4, 5, 6],
                              provenance={"demo": "classical path"})


def effective_demo() -> tuple[EffectiveSetup, StageParams]:
    m1 = 128
    m2 = int(10 * m1 ** 4) + 1
    setup = EffectiveSetup(Q(4), Q(1, 4), "E", [m1, m2, 10 * m2 ** 4 + 1], [4, 5, 6])
    return setup, StageParams(Q(15, 4), Q(17, 4), Q(1, 10), Q(1, 20))
