import numpy as np
import pytest

from ptq import sim
from ptq.system import PerturbedSystem, random_system

# 24 seed-fixed systems: 12 with M = 4, 12 with M = 8
CORPUS_SPECS = [(2, s) for s in range(12)] + [(3, 100 + s) for s in range(12)]


def corpus(lam=0.1):
    return [random_system(N, seed, lam=lam) for N, seed in CORPUS_SPECS]


def two_level(lam=0.1, v=0.5):
    return PerturbedSystem(1, [0.0, 1.0], [[0, v], [v, 0]], lam, 0)


@pytest.fixture
def two_level_system():
    return two_level()


@pytest.fixture(params=sorted(sim.KERNELS))
def kernels(request):
    return sim.get_kernels(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
