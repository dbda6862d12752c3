import numpy as np
import pytest

from bayeslogit.data import Dataset


def std_normal_target(q):
    """Log-density and gradient of the standard multivariate normal."""
    return -0.5 * float(q @ q), -q


@pytest.fixture
def tiny_dataset():
    """Fixed 8-row, 3-column design (intercept + two covariates)."""
    rng = np.random.default_rng(1234)
    X = np.column_stack([np.ones(8), rng.standard_normal(8), rng.standard_normal(8)])
    y = np.array([0, 1, 1, 0, 1, 0, 0, 1], dtype=float)
    return Dataset(X, y, ("intercept", "a", "b"))


def random_dataset(n, k, seed, theta=None):
    """Logistic data with an intercept and k standard-normal covariates."""
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n), rng.standard_normal((n, k))])
    if theta is None:
        theta = rng.uniform(-1.0, 1.0, size=k + 1)
    p = 1.0 / (1.0 + np.exp(-(X @ theta)))
    y = (rng.random(n) < p).astype(float)
    names = ("intercept",) + tuple(f"x{j}" for j in range(1, k + 1))
    return Dataset(X, y, names), np.asarray(theta, dtype=float)
