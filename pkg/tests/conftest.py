import numpy as np
import pytest

from fisher_hydro import PhysicalConstants, make_grid


@pytest.fixture
def constants():
    return PhysicalConstants()


@pytest.fixture
def grid1d():
    return make_grid(1, 512, 40.0)


@pytest.fixture
def grid1d_fine():
    return make_grid(1, 2048, 40.0)


@pytest.fixture
def grid2d():
    return make_grid(2, 128, 20.0)


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
