import numpy as np
import pytest

from isoprod import catalogue


@pytest.fixture(scope="session")
def gallery():
    return catalogue()


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
