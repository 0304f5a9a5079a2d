import numpy as np
import pytest

from shrinktg.rand_dist import RngStream


@pytest.fixture
def rng():
    return RngStream(20240601, 0)


@pytest.fixture
def np_rng():
    return np.random.default_rng(12345)
