import numpy as np
import pytest

from seqsel.core import SymbolSequence


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def complex_gaussian(rng, shape, power=1.0):
    z = rng.standard_normal((*shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(power / 2)


def seq(rng, pol, n, power=1.0):
    return SymbolSequence(complex_gaussian(rng, (pol, n), power))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
