"""Linear softmax policy with exact probabilities and analytic gradients.

The policy scores actions with a bias-free linear model, ``logits = W @ x``
for a (num_actions, context_dim) weight matrix W, and turns scores into a
distribution with a max-shifted softmax. Gradients of pi(a|x) with respect
to W are available in closed form:

    d pi(a|x) / d W[b, :] = pi(a|x) * (1[a == b] - pi(b|x)) * x

and the log-probability gradient is the same expression without the leading
pi(a|x) factor, which is the numerically safe way to compute it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, NumericError

_PROB_UNDERFLOW = 1e-300


def stable_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Softmax with the max logit subtracted before exponentiation."""
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=axis, keepdims=True)


@dataclass(frozen=True)
class LinearSoftmaxPolicy:
    """Softmax over per-action linear scores; immutable value type."""

    weights: np.ndarray  # (num_actions, context_dim)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2:
            raise ContractViolationError("weights must be a (num_actions, context_dim) matrix")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, num_actions: int, context_dim: int) -> "LinearSoftmaxPolicy":
        """Zero weights: every context gets the uniform distribution."""
        return cls(np.zeros((num_actions, context_dim)))

    @property
    def num_actions(self) -> int:
        return self.weights.shape[0]

    @property
    def context_dim(self) -> int:
        return self.weights.shape[1]

    def _check_context(self, context: np.ndarray) -> np.ndarray:
        ctx = np.asarray(context, dtype=float)
        if ctx.shape != (self.context_dim,):
            raise ContractViolationError(
                f"context has shape {ctx.shape}, policy expects ({self.context_dim},)"
            )
        return ctx

    def action_probabilities(self, context: np.ndarray) -> np.ndarray:
        """Probability vector over the action space for one context."""
        ctx = self._check_context(context)
        return stable_softmax(self.weights @ ctx)

    def probabilities_matrix(self, contexts: np.ndarray) -> np.ndarray:
        """Row-wise action probabilities for a batch of contexts, shape (n, K)."""
        ctxs = np.asarray(contexts, dtype=float)
        if ctxs.ndim != 2 or ctxs.shape[1] != self.context_dim:
            raise ContractViolationError(
                f"contexts have shape {ctxs.shape}, policy expects (n, {self.context_dim})"
            )
        return stable_softmax(ctxs @ self.weights.T, axis=1)

    def grad_prob(self, context: np.ndarray, action: int) -> np.ndarray:
        """Gradient of pi(action|context) w.r.t. the weights, shape like weights."""
        probs = self.action_probabilities(context)
        self._check_action(action)
        ctx = np.asarray(context, dtype=float)
        indicator = np.zeros(self.num_actions)
        indicator[action] = 1.0
        return probs[action] * np.outer(indicator - probs, ctx)

    def grad_log_prob(self, context: np.ndarray, action: int) -> np.ndarray:
        """Gradient of log pi(action|context), computed without dividing by pi."""
        probs = self.action_probabilities(context)
        self._check_action(action)
        if probs[action] < _PROB_UNDERFLOW:
            raise NumericError(
                f"pi(a|x) underflowed ({probs[action]!r}); log-gradient undefined"
            )
        ctx = np.asarray(context, dtype=float)
        indicator = np.zeros(self.num_actions)
        indicator[action] = 1.0
        return np.outer(indicator - probs, ctx)

    def sample_action(self, context: np.ndarray, rng: np.random.Generator):
        """Draw an action; returns (action, exact probability of that action)."""
        probs = self.action_probabilities(context)
        action = int(rng.choice(self.num_actions, p=probs))
        return action, float(probs[action])

    def _check_action(self, action: int) -> None:
        if not 0 <= action < self.num_actions:
            raise ContractViolationError(
                f"action {action} outside [0, {self.num_actions})"
            )
