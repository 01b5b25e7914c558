import numpy as np
import pytest

from qinfocrit.qhbm import builtin_model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def m1():
    return builtin_model("M1")


@pytest.fixture(scope="session")
def m2():
    return builtin_model("M2")


def central_diff(f, x, j, h):
    e = np.zeros_like(x)
    e[j] = h
    return (f(x + e) - f(x - e)) / (2 * h)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
