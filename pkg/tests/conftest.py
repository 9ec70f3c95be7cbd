import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from relcorr import relalg as ra
from relcorr.space import Space, VarDecl

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def small_space(n: int, name: str = "S") -> Space:
    return Space(name, (VarDecl("s", "int", 0, n - 1),))


def random_relation(rng: np.random.Generator, sp: Space, density: float = 0.4):
    n = sp.cardinality
    m = rng.random((n, n)) < density
    return ra.from_pairs(sp, zip(*np.nonzero(m)))


def random_function(rng: np.random.Generator, sp: Space, undefined: float = 0.25):
    n = sp.cardinality
    succ = rng.integers(0, n, size=n)
    succ[rng.random(n) < undefined] = -1
    return ra.from_successors(sp, succ)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def cube_space():
    return Space("T", (VarDecl("s", "int", 0, 125),))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
