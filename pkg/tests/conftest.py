import warnings

import numpy as np
import pytest

from bsfv.mesh import build_uniform
from bsfv.model import MarketData, default_market, european_call


def make_model(r=0.1, sigma=0.5, strike=100.0, maturity=1.0, x_max=300.0, boundary="exact"):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return european_call(MarketData.constant(r, sigma, strike, maturity, x_max), boundary=boundary)


@pytest.fixture(scope="session")
def call_model():
    return european_call(default_market())


@pytest.fixture
def mesh4():
    """N=3 uniform mesh on [0, 4]: nodes 0, 1, 2, 3, 4."""
    return build_uniform(3, 4.0)


@pytest.fixture
def unit_vol_model():
    """sigma=1, r=0, so (a, b, c) = (0.5, -1, 0)."""
    return make_model(r=0.0, sigma=1.0, strike=1.0, x_max=4.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
