import numpy as np
import pytest

from qobserve.linalg import kron, pauli
from qobserve.system import ControlSystem

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered exit criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[number] = (title, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, verdict = _ACCEPTANCE[number]
        terminalreporter.write_line(f"{verdict} criterion {number:2d}: {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


@pytest.fixture
def ising():
    sx, sz, one = pauli("x"), pauli("z"), pauli("1")
    return ControlSystem((kron(sx, one),), kron(sz, one) + kron(one, sz), drift=kron(sz, sz), label="ising")


@pytest.fixture
def rotation_qubit():
    i_s = np.array([[1j, 1], [-1, -1j]])
    return ControlSystem.from_generators([np.array([[0, 1], [-1, 0]])], -1j * i_s)


@pytest.fixture
def qutrit():
    gen = np.array([[1j, 0, 2], [0, -1j, 0], [-2, 0, 0]])
    return ControlSystem.from_generators([gen], np.diag([1.0, -3.0, 2.0]))


@pytest.fixture
def so2():
    return ControlSystem.from_generators([np.array([[0, 1], [-1, 0]])], np.diag([1.0, -1.0]))
