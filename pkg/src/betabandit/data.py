"""Logged bandit feedback containers.

A logged interaction is the tuple (context, action, reward, propensity)
recorded while the behavior policy was in control; the propensity is the
behavior policy's probability of the logged action. Estimators require
common support, i.e. every logged propensity strictly positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CommonSupportError, ContractViolationError


@dataclass(frozen=True)
class LoggedInteraction:
    """One logged round: context vector, chosen action, reward, propensity."""

    context: np.ndarray
    action: int
    reward: float
    propensity: float

    def __post_init__(self):
        ctx = np.asarray(self.context, dtype=float)
        object.__setattr__(self, "context", ctx)
        if ctx.ndim != 1:
            raise ContractViolationError("context must be a 1-d vector")
        if not 0.0 < self.propensity <= 1.0:
            raise CommonSupportError(
                f"propensity must lie in (0, 1], got {self.propensity}"
            )
        if self.action < 0:
            raise ContractViolationError(f"action must be >= 0, got {self.action}")


@dataclass(frozen=True)
class LoggedDataset:
    """Columnar store of logged interactions.

    Rows share a context dimension and action-space size; ``contexts`` has
    shape (n, context_dim), the remaining columns have shape (n,). Row order
    is meaningful and preserved by every transformation.
    """

    contexts: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    propensities: np.ndarray
    num_actions: int
    context_dim: int = field(default=-1)

    def __post_init__(self):
        contexts = np.atleast_2d(np.asarray(self.contexts, dtype=float))
        actions = np.asarray(self.actions, dtype=np.int64)
        rewards = np.asarray(self.rewards, dtype=float)
        props = np.asarray(self.propensities, dtype=float)
        n = contexts.shape[0]
        if not (actions.shape == rewards.shape == props.shape == (n,)):
            raise ContractViolationError("column lengths disagree")
        dim = contexts.shape[1] if self.context_dim < 0 else self.context_dim
        if contexts.shape[1] != dim:
            raise ContractViolationError(
                f"contexts have dimension {contexts.shape[1]}, expected {dim}"
            )
        if n > 0:
            if props.min() <= 0.0 or props.max() > 1.0:
                bad = int(np.argmax((props <= 0.0) | (props > 1.0)))
                raise CommonSupportError(
                    f"propensity out of (0, 1] at index {bad}: {props[bad]}"
                )
            if actions.min() < 0 or actions.max() >= self.num_actions:
                raise ContractViolationError(
                    f"action index out of [0, {self.num_actions})"
                )
        object.__setattr__(self, "contexts", contexts)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "propensities", props)
        object.__setattr__(self, "context_dim", dim)

    @classmethod
    def from_interactions(cls, interactions, num_actions: int) -> "LoggedDataset":
        rows = list(interactions)
        if not rows:
            raise ContractViolationError("cannot build a dataset from zero interactions")
        return cls(
            contexts=np.stack([r.context for r in rows]),
            actions=np.array([r.action for r in rows]),
            rewards=np.array([r.reward for r in rows]),
            propensities=np.array([r.propensity for r in rows]),
            num_actions=num_actions,
        )

    def __len__(self) -> int:
        return self.contexts.shape[0]

    def __getitem__(self, i: int) -> LoggedInteraction:
        return LoggedInteraction(
            context=self.contexts[i],
            action=int(self.actions[i]),
            reward=float(self.rewards[i]),
            propensity=float(self.propensities[i]),
        )

    def subset(self, indices) -> "LoggedDataset":
        """Rows at ``indices`` (order as given), as a new dataset."""
        idx = np.asarray(indices)
        return LoggedDataset(
            contexts=self.contexts[idx],
            actions=self.actions[idx],
            rewards=self.rewards[idx],
            propensities=self.propensities[idx],
            num_actions=self.num_actions,
        )

    def split(self, fraction: float, rng: np.random.Generator):
        """Shuffle rows and split into (first, second) with ``fraction`` in the second."""
        if not 0.0 < fraction < 1.0:
            raise ContractViolationError("split fraction must be in (0, 1)")
        perm = rng.permutation(len(self))
        cut = len(self) - int(round(fraction * len(self)))
        if cut < 1 or cut >= len(self):
            raise ContractViolationError("split leaves an empty part")
        return self.subset(perm[:cut]), self.subset(perm[cut:])
