import numpy as np
import pytest

from slogs.grid import Grid


@pytest.fixture
def torus():
    return Grid(1, 2 * np.pi, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def smooth_random(grid, rng, modes=6, batch=None):
    """Random trigonometric polynomial with a few low modes."""
    shape = (modes,) if batch is None else (batch, modes)
    c = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    k = 2 * np.pi / grid.length * np.arange(-(modes // 2), modes - modes // 2)
    return np.exp(1j * np.multiply.outer(k, grid.x)).T @ c.T if batch is None else \
        c @ np.exp(1j * np.multiply.outer(k, grid.x))


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
