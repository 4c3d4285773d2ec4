import math

import numpy as np
import pytest

from fracbvp.config import load_example
from fracbvp.kernel import KernelContext, ProblemSpec
from fracbvp.measures import SignedMeasure

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def example_config():
    return load_example()


@pytest.fixture(scope="session")
def example_ctx(example_config):
    return KernelContext(example_config.spec)


@pytest.fixture(scope="session")
def dirichlet_ctx():
    """mu = beta = 0, alpha = 3, eta = 1/2: H reduces to G."""
    return KernelContext(ProblemSpec(alpha=3.0, mu=0.0, eta=0.5, beta=0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


EXAMPLE_MEASURE = SignedMeasure(atoms=[(3 / 7, 2.0), (4 / 7, -1.0)])


def piecewise_g(s):
    """Piecewise g_A of the five-point example, written out by hand."""
    c = 1.0 / math.gamma(2.5)
    if s < 3 / 7:
        return c * (2 / 7 * (1 - s) ** 1.5 - 2 * (3 / 7 - s) ** 1.5 + (4 / 7 - s) ** 1.5)
    if s < 4 / 7:
        return c * (2 / 7 * (1 - s) ** 1.5 + (4 / 7 - s) ** 1.5)
    return c * 2 / 7 * (1 - s) ** 1.5


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
