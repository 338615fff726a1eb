import numpy as np
import pytest
from hypothesis import settings

from nonlocal_gap import Domain, gaussian, generalized_exponential, tent

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def interval():
    return Domain.interval(-1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def kernels_for(dimension):
    return {
        "gaussian": gaussian(8.0, dimension),
        "exponential": generalized_exponential(1.0, 6.0, dimension),
        "tent": tent(0.5, dimension),
    }


DOMAINS = {
    "interval": Domain.interval(-1.0, 1.0),
    "two_intervals": Domain.from_boxes([[0.0, 1.0], [1.25, 2.25]]),
    "l_shape": Domain.from_boxes([[0.0, 0.0, 2.0, 1.0], [0.0, 1.0, 1.0, 2.0]]),
}
