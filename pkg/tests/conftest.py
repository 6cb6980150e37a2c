import numpy as np
import pytest

from nlpoisson.assembly import assemble
from nlpoisson.geometry import build_cloud
from nlpoisson.kernels import cosine_profile


@pytest.fixture(scope="session")
def profile():
    return cosine_profile()


@pytest.fixture(scope="session")
def small_cloud():
    """hemisphere2 at t=5, seed=1: n0 = 40, small enough for dense oracles."""
    return build_cloud("hemisphere2", 5, 1)


@pytest.fixture(scope="session")
def small_system(small_cloud):
    return assemble(small_cloud, mode="full")


@pytest.fixture(scope="session")
def medium_cloud():
    """hemisphere2 at t=10, seed=1: n0 = 130."""
    return build_cloud("hemisphere2", 10, 1)


@pytest.fixture(scope="session")
def medium_system(medium_cloud):
    return assemble(medium_cloud, mode="full")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240613)
