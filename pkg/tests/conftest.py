import numpy as np
import pytest

from balancedvrp.instance import Instance, capacity_for


def make_instance(coords, demands, K, Q=None, depot=(0, 0), name="t"):
    if Q is None:
        Q = sum(demands)
    return Instance(name=name, depot=depot, coords=coords, demands=demands, K=K, Q=Q)


def random_small(n, K, seed, binding=True, name=None):
    """Random points on a 100 grid; binding=True uses the K-vehicles-required capacity."""
    rng = np.random.default_rng(seed)
    pts = [tuple(int(v) for v in p) for p in rng.integers(0, 101, size=(n + 1, 2))]
    dem = [int(q) for q in rng.integers(1, 31, size=n)]
    if binding and K >= 2:
        Q = max(max(dem), capacity_for(sum(dem), K))
    else:
        Q = sum(dem)
    return Instance(name=name or f"r{seed}-n{n + 1}-k{K}", depot=pts[0], coords=pts[1:],
                    demands=dem, K=K, Q=Q)


@pytest.fixture
def six():
    return random_small(6, 3, seed=11)


# one PASS/FAIL line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
