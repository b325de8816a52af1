import numpy as np
import pytest

from scaled_polarity.bodies import Box, VPolytope


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def interval():
    """[-1, 1] as a 1-D body."""
    return Box([1.0])


@pytest.fixture
def shifted_interval():
    """[-1, 3], a body whose centroid is not the origin."""
    return VPolytope([[-1.0], [3.0]])
