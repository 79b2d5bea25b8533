import numpy as np
import pytest

from fracwave.harmonics import GroupSpec, build_grid, get_dual


@pytest.fixture(scope="session")
def torus2():
    g = GroupSpec.torus(2, 6)
    return g, get_dual(g), build_grid(g)


@pytest.fixture(scope="session")
def so3():
    g = GroupSpec.so3(5)
    return g, get_dual(g), build_grid(g)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    if config.acceptance_lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in config.acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(pytestconfig):
    """Record and print one pass/fail line; returns the verdict."""
    def record(label, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {label}: {detail}"
        pytestconfig.acceptance_lines.append(line)
        print(line)
        return passed
    return record
