import numpy as np
import pytest

from saddlescape import Landscape, LandscapeParams


@pytest.fixture(scope="session")
def default_params():
    return LandscapeParams()  # L=1, gamma=0.5, tau=1, n_saddles=9


@pytest.fixture(scope="session")
def landscape(default_params):
    return Landscape(default_params)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
