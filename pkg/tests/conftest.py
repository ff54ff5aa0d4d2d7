import numpy as np
import pytest

from jtarch.potential import Potential


def rel_err(a, b) -> float:
    """Largest entrywise relative error, with exact zeros required to match."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    assert a.shape == b.shape
    if a.size == 0:
        return 0.0
    zero = b == 0
    if np.any(a[zero] != 0):
        return float("inf")
    nz = ~zero
    if not np.any(nz):
        return 0.0
    return float(np.max(np.abs(a[nz] - b[nz]) / np.abs(b[nz])))


def random_potential(rng: np.random.Generator, scope, low=0.5, high=2.0, zero_prob=0.0) -> Potential:
    scope = tuple(scope)
    t = rng.uniform(low, high, 1 << len(scope))
    if zero_prob:
        t[rng.random(t.size) < zero_prob] = 0.0
    return Potential(scope, t)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
