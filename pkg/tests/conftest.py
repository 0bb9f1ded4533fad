import numpy as np
import pytest

from gensobol import GridFunction


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def grid3(rng):
    return GridFunction.random(3, 3, rng)
