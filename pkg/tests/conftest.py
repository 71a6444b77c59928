import numpy as np
import pytest

from fidshadow.quantum_core import validate_channel


def unitary_phase(alpha: float):
    return validate_channel([np.diag([1.0, np.exp(1j * alpha)])])


@pytest.fixture
def projectors():
    return validate_channel([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])


@pytest.fixture
def bit_flip():
    return validate_channel([np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0, 0.0], [1.0, 0.0]])])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
