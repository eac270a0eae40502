from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from lassgap import gadgets, graphs, xor3

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def petersen() -> graphs.Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return graphs.Graph(10, outer + spokes + inner, "Petersen")


def cube() -> graphs.Graph:
    edges = [(u, u ^ (1 << b)) for u in range(8) for b in range(3) if u < u ^ (1 << b)]
    return graphs.Graph(8, edges, "Q3")


# small graphs shared by the relaxation tests
SMALL_GRAPHS = {
    "P2": graphs.path(2),
    "P3": graphs.path(3),
    "P4": graphs.path(4),
    "C4": graphs.cycle(4),
    "C5": graphs.cycle(5),
    "K3": graphs.complete(3),
    "K4": graphs.complete(4),
    "S5": graphs.star(5),
    "2K2": graphs.disjoint_edges(2),
}


def planted_bs(n, beta, M, seed=0, certify=True):
    inst, plant = xor3.sample_planted(n, int(Fraction(beta) * n), seed)
    H = gadgets.build_bs_instance(inst, gadgets.GadgetParams(Fraction(beta), M, seed=seed, certify=certify))
    return inst, plant, H


@pytest.fixture(scope="session")
def small_h():
    """Smallest gadget graph: n=3, m=3, beta=1, M=1 (21 vertices)."""
    return planted_bs(3, 1, 1, seed=0)


@pytest.fixture(scope="session")
def h_428():
    return planted_bs(4, 2, 2, seed=7)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
