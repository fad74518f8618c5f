import sys

import pytest
from hypothesis import HealthCheck, settings

from jarnik.demos import classical_demo, demo_construction, probe_demo
from jarnik.exact import Q
from jarnik.families import build_construction
from jarnik.sequences import TargetSpec, synthesize

settings.register_profile("repo", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def demos():
    return {fam: demo_construction(fam) for fam in ("E", "G", "EJ", "F")}


@pytest.fixture(scope="session")
def strict_E():
    seqs, rep = synthesize(TargetSpec(Q(3), Q(1, 5), "E", 3))
    C = build_construction("E", seqs.m_seq, seqs.a_seq, seqs.q_seq, [0, 0, 0])
    return seqs, rep, C


@pytest.fixture(scope="session")
def probe_construction():
    return probe_demo()


@pytest.fixture(scope="session")
def classical_J():
    return classical_demo(4)


def pytest_terminal_summary(terminalreporter):
    results = sys.modules.get("test_acceptance")
    lines = getattr(results, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for num in sorted(lines):
            terminalreporter.write_line(lines[num])
