import numpy as np
import pytest

from kp5 import Grid, DispersionParams, SpectralField


@pytest.fixture
def grid():
    return Grid(32, 32, 2 * np.pi, 2 * np.pi)


@pytest.fixture
def params():
    return DispersionParams(alpha=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_field(grid, rng, scale=1.0):
    raw = scale * (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))
    return SpectralField.from_coeffs(grid, raw)


@pytest.fixture
def field(grid, rng):
    return random_field(grid, rng)
