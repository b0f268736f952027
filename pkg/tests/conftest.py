import numpy as np
import pytest

from betabandit import LinearSoftmaxPolicy, LoggedDataset


def random_instance(seed: int, num_actions: int = 5, context_dim: int = 3, size: int = 50):
    """A random (dataset, policy) pair with valid propensities."""
    rng = np.random.default_rng(seed)
    weights = rng.normal(size=(num_actions, context_dim))
    contexts = rng.normal(size=(size, context_dim))
    actions = rng.integers(0, num_actions, size)
    propensities = rng.uniform(0.05, 1.0, size)
    rewards = rng.uniform(0.0, 1.0, size)
    dataset = LoggedDataset(contexts, actions, rewards, propensities, num_actions)
    return dataset, LinearSoftmaxPolicy(weights)


@pytest.fixture
def make_instance():
    return random_instance


@pytest.fixture
def two_sample_dataset():
    """Importance weights (2, 0.5) under the uniform two-action policy."""
    dataset = LoggedDataset(
        contexts=[[1.0], [1.0]],
        actions=[0, 1],
        rewards=[1.0, 0.0],
        propensities=[0.25, 1.0],
        num_actions=2,
    )
    return dataset, LinearSoftmaxPolicy.uniform(2, 1)


def central_difference(value_fn, weights: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Componentwise central finite difference of a scalar function of θ."""
    grad = np.zeros_like(weights)
    for i in range(weights.shape[0]):
        for j in range(weights.shape[1]):
            plus, minus = weights.copy(), weights.copy()
            plus[i, j] += eps
            minus[i, j] -= eps
            grad[i, j] = (value_fn(plus) - value_fn(minus)) / (2 * eps)
    return grad


@pytest.fixture
def finite_difference():
    return central_difference
