import math

import numpy as np
import pytest

from forcedosc import casefile as cf
from forcedosc import network as nw

TWO_HZ = 4 * math.pi


@pytest.fixture(scope="session")
def noloss():
    return cf.load_fixture("ieee39_noloss")


@pytest.fixture(scope="session")
def lossy():
    return cf.load_fixture("ieee39_lossy")


@pytest.fixture(scope="session")
def three_bus():
    return cf.load_fixture("three_bus")


@pytest.fixture(scope="session")
def lossy_net(lossy):
    return nw.assemble(lossy, TWO_HZ)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_complex(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
