import numpy as np
import pytest

from tsmkit import analysis, ays
from tsmkit.grid import Grid
from tsmkit.oracle import SuccessorGraph
from tsmkit.viability import SuccessorMap

# filled by test_acceptance; printed once at the end of the session
CRITERIA: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def ays40():
    return analysis.ays_partition(ays.AYSParams(), 40)


@pytest.fixture(scope="session")
def ays80():
    return analysis.ays_partition(ays.AYSParams(), 80)


def random_graph(seed: int, max_side: int = 12, controls=("default", "u1")):
    """Random explicit successor graph on a small 2-D grid, plus its fast-map twin."""
    rng = np.random.default_rng(seed)
    nx, ny = rng.integers(2, max_side + 1, 2)
    grid = Grid((0.0, 0.0), (1.0, 1.0), (int(nx), int(ny)))
    g = SuccessorGraph.random(grid, controls, rng, max_out=int(rng.integers(1, 4)),
                              p_empty=float(rng.uniform(0, 0.3)))
    return g, SuccessorMap.from_adjacency(grid, g.adjacency, "default"), rng


def random_subset(rng, n, p=None):
    p = rng.uniform(0.1, 0.9) if p is None else p
    return np.flatnonzero(rng.random(n) < p)
