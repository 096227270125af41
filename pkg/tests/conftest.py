import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_quaternions(rng, k):
    return rng.normal(size=(k, 4))


def base_point(rng, m, avoid_string=False):
    """Generic base point: no center near the origin, first two directions not collinear."""
    while True:
        x = rng.normal(size=(m, 3))
        norms = np.linalg.norm(x, axis=1)
        if norms.min() < 0.2:
            continue
        if avoid_string and np.min(norms + x[:, 2]) < 0.2 * norms.min():
            continue
        if m > 1 and np.linalg.norm(np.cross(x[0], x[1])) < 0.1 * norms[0] * norms[1]:
            continue
        return x


@pytest.fixture
def sample_base():
    return base_point
