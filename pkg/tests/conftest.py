import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_pair(rng, n=8, sparsity=0.0):
    """Random nonnegative (matrix, weights) instance for property tests."""
    matrix = rng.random((n, n))
    if sparsity:
        matrix[rng.random((n, n)) < sparsity] = 0.0
    weights = rng.random(n)
    return matrix, weights
