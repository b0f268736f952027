"""Synthetic contextual-bandit environment.

The environment assigns every (context, action) pair an expected reward
q(x, a) = expit(phi_a . x + b_a) with per-action embeddings phi and biases
b; observed rewards are Bernoulli draws from q. The behavior policy is a
softmax over inverse_temperature * q(x, .), so positive temperatures make
logging increasingly greedy on the true reward and negative ones
increasingly anti-greedy. All randomness flows through named substreams of
the config seed, so identical configs produce bitwise-identical data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .data import LoggedDataset
from .errors import ContractViolationError
from .policy import LinearSoftmaxPolicy, stable_softmax
from .rngs import STREAM_DATASET, STREAM_ENV, substream


@dataclass(frozen=True)
class EnvironmentConfig:
    num_actions: int
    inverse_temperature: float
    dataset_size: int
    seed: int
    context_dim: int = 5

    def __post_init__(self):
        if self.context_dim < 1:
            raise ContractViolationError("context_dim must be >= 1")
        if self.num_actions < 2:
            raise ContractViolationError("num_actions must be >= 2")
        if self.dataset_size < 1:
            raise ContractViolationError("dataset_size must be >= 1")


@dataclass(frozen=True)
class Environment:
    """Ground truth: action embeddings and biases defining q(x, a)."""

    action_embeddings: np.ndarray  # (K, d)
    action_biases: np.ndarray  # (K,)

    @property
    def num_actions(self) -> int:
        return self.action_embeddings.shape[0]

    @property
    def context_dim(self) -> int:
        return self.action_embeddings.shape[1]

    def expected_rewards(self, contexts: np.ndarray) -> np.ndarray:
        """q(x, a) for each row of ``contexts``; shape (n, K), values in (0, 1)."""
        ctxs = np.atleast_2d(np.asarray(contexts, dtype=float))
        return expit(ctxs @ self.action_embeddings.T + self.action_biases)


def generate_environment(config: EnvironmentConfig) -> Environment:
    """Draw embeddings ~ N(0, 1/sqrt(d)) and biases ~ N(0, 0.5) from the seed."""
    rng = substream(config.seed, STREAM_ENV)
    d = config.context_dim
    phi = rng.normal(0.0, 1.0 / np.sqrt(d), size=(config.num_actions, d))
    b = rng.normal(0.0, 0.5, size=config.num_actions)
    return Environment(action_embeddings=phi, action_biases=b)


def logging_policy_probs(
    env: Environment, context: np.ndarray, inverse_temperature: float
) -> np.ndarray:
    """Behavior-policy distribution softmax(inverse_temperature * q(x, .))."""
    if not np.isfinite(inverse_temperature):
        raise ContractViolationError("inverse_temperature must be finite")
    q = env.expected_rewards(np.atleast_2d(context))[0]
    return stable_softmax(inverse_temperature * q)


def _logging_probs_matrix(
    env: Environment, contexts: np.ndarray, inverse_temperature: float
) -> np.ndarray:
    q = env.expected_rewards(contexts)
    return stable_softmax(inverse_temperature * q, axis=1)


def generate_logged_dataset(
    env: Environment, config: EnvironmentConfig, replication: int = 0
) -> LoggedDataset:
    """Log ``dataset_size`` rounds under the softmax behavior policy.

    Contexts are standard normal, actions are drawn from the behavior
    policy with their exact probability recorded as the propensity, and
    rewards are Bernoulli(q(x, a)). ``replication`` selects an independent
    substream so replicated datasets can be generated in any order.
    """
    rng = substream(config.seed, STREAM_DATASET, replication)
    n, d = config.dataset_size, config.context_dim
    contexts = rng.standard_normal((n, d))
    probs = _logging_probs_matrix(env, contexts, config.inverse_temperature)
    actions = _sample_rows(probs, rng)
    propensities = probs[np.arange(n), actions]
    q_chosen = env.expected_rewards(contexts)[np.arange(n), actions]
    rewards = (rng.random(n) < q_chosen).astype(float)
    return LoggedDataset(
        contexts=contexts,
        actions=actions,
        rewards=rewards,
        propensities=propensities,
        num_actions=env.num_actions,
    )


def _sample_rows(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One categorical draw per row of ``probs`` via inverse-CDF."""
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0])
    actions = (u[:, None] >= cdf).sum(axis=1)
    return np.minimum(actions, probs.shape[1] - 1)


def true_policy_value(
    env: Environment,
    policy: LinearSoftmaxPolicy,
    num_contexts: int,
    rng: np.random.Generator,
    block_size: int = 65536,
) -> float:
    """Monte-Carlo-over-contexts, exact-over-actions value of ``policy``.

    Averages sum_a pi(a|x) q(x, a) over fresh standard-normal contexts,
    processed in blocks so million-context oracles stay in modest memory.
    """
    if num_contexts < 1:
        raise ContractViolationError("num_contexts must be >= 1")
    total = 0.0
    remaining = num_contexts
    while remaining > 0:
        block = min(block_size, remaining)
        contexts = rng.standard_normal((block, env.context_dim))
        probs = policy.probabilities_matrix(contexts)
        q = env.expected_rewards(contexts)
        total += float(np.sum(probs * q))
        remaining -= block
    return total / num_contexts


def policy_value_on_contexts(
    env: Environment, policy: LinearSoftmaxPolicy, contexts: np.ndarray
) -> float:
    """Exact-over-actions value on a fixed context set (shared test oracle)."""
    probs = policy.probabilities_matrix(contexts)
    q = env.expected_rewards(contexts)
    return float(np.mean(np.sum(probs * q, axis=1)))
