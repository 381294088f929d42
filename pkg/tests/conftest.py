import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kplane.quadrature import Quadrature

settings.register_profile(
    "repo", derandomize=True, deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def quad():
    return Quadrature(order=16, levels=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
