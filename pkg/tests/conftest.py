import numpy as np
import pytest

from swreg.core import DensityGrid, Domain

SQUARE = Domain.square(1.0)


def gaussian_blob(shape=(64, 64), sigma=0.3, center=(0.0, 0.0), domain=SQUARE) -> DensityGrid:
    z = domain.mesh(shape)
    vals = np.exp(-0.5 * np.sum((z - np.asarray(center)) ** 2, axis=-1) / sigma**2)
    return DensityGrid(domain, vals, normalize=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def square():
    return SQUARE


def pytest_terminal_summary(terminalreporter):
    from tests import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
