import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from thintree.graph import MultiGraph

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def multigraphs(draw, min_n=2, max_n=8, max_mult=3, connected=True):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    edges = []
    if connected:
        order = rng.permutation(n)
        edges = [(int(order[i]), int(order[rng.integers(i)])) for i in range(1, n)]
    for _ in range(draw(st.integers(0, 2 * n))):
        u, v = rng.choice(n, size=2, replace=False)
        edges.append((int(u), int(v)))
    if not edges:
        edges = [(0, 1)]
    edges = [e for e in edges for _ in range(int(rng.integers(1, max_mult + 1)))]
    return MultiGraph(n, tuple(edges))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for the summary, then assert it."""

    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
