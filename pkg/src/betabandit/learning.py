"""Policy optimization loops over logged bandit feedback.

Both loops perform gradient *ascent* on an off-policy value estimate with
Adam and an inverse-time learning-rate decay. ``train_full_batch`` computes
one gradient per epoch over the whole dataset and supports the
self-normalized objective (whose ratio form does not decompose into batch
sums); ``train_mini_batch`` shuffles and partitions each epoch and supports
the per-batch closed-form gradient baseline. Training never touches the
environment: fresh-context evaluation happens only through the supplied
value oracle, which is a plain ``policy -> float`` callable.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .data import LoggedDataset
from .errors import ContractViolationError, DegenerateBaselineError, NumericError
from .estimators import (
    KIND_ESTIMATOR_OPTIMAL,
    KIND_FIXED,
    KIND_GRAD_OPTIMAL,
    KIND_SELF_NORMALIZED,
    KIND_ZERO,
    BaselineMode,
    baseline_ips_gradient,
    gradient_sample_variance,
    optimal_gradient_baseline,
    optimal_value_baseline,
    snips_gradient,
    snips_value,
)
from .policy import LinearSoftmaxPolicy
from .rngs import STREAM_TRAIN, substream

logger = logging.getLogger("betabandit")

_FULL_BATCH_KINDS = (KIND_ZERO, KIND_SELF_NORMALIZED, KIND_ESTIMATOR_OPTIMAL)
_MINI_BATCH_KINDS = (KIND_ZERO, KIND_FIXED, KIND_GRAD_OPTIMAL)


@dataclass(frozen=True)
class OptimizerConfig:
    """Adam hyper-parameters plus the epoch/batch budget.

    The effective learning rate at epoch t (0-based) is
    base_learning_rate / (1 + decay_rate * t), held constant within an
    epoch. ``batch_size`` may be the string "full" to collapse the
    mini-batch partition into a single batch.
    """

    base_learning_rate: float
    epochs: int
    batch_size: int | str = 1024
    decay_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not self.base_learning_rate > 0:
            raise ContractViolationError("base_learning_rate must be positive")
        if self.epochs < 0:
            raise ContractViolationError("epochs must be nonnegative")
        if self.decay_rate < 0:
            raise ContractViolationError("decay_rate must be nonnegative")
        if self.batch_size != "full" and (
            not isinstance(self.batch_size, int) or self.batch_size < 1
        ):
            raise ContractViolationError('batch_size must be a positive integer or "full"')

    def learning_rate_at(self, epoch_index: int) -> float:
        return self.base_learning_rate / (1.0 + self.decay_rate * epoch_index)


class AdamState:
    """First/second moment accumulators for one parameter matrix."""

    def __init__(self, shape: tuple[int, ...], config: OptimizerConfig):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.step_count = 0
        self.config = config


def adam_step(state: AdamState, params: np.ndarray, gradient: np.ndarray, lr: float) -> np.ndarray:
    """One bias-corrected Adam ascent update; returns the new parameters."""
    if not np.all(np.isfinite(gradient)):
        raise NumericError("non-finite gradient; aborting the run")
    cfg = state.config
    state.step_count += 1
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * gradient
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * gradient**2
    m_hat = state.m / (1.0 - cfg.beta1**state.step_count)
    v_hat = state.v / (1.0 - cfg.beta2**state.step_count)
    return params + lr * m_hat / (np.sqrt(v_hat) + cfg.epsilon)


@dataclass(frozen=True)
class EpochRecord:
    """Diagnostics for one epoch: value on fresh contexts, gradient noise, baseline."""

    epoch: int  # 1-based
    test_policy_value: float
    gradient_variance: float
    beta_used: float | None


@dataclass(frozen=True)
class TrainingReport:
    records: list[EpochRecord] = field(default_factory=list)
    final_policy: LinearSoftmaxPolicy | None = None

    def final_test_value(self) -> float:
        return self.records[-1].test_policy_value

    def epochs_to_reach(self, target: float) -> int | None:
        """First (1-based) epoch whose test value meets ``target``, else None."""
        for record in self.records:
            if record.test_policy_value >= target:
                return record.epoch
        return None


def _safe_value_baseline(dataset: LoggedDataset, policy: LinearSoftmaxPolicy) -> float:
    try:
        return optimal_value_baseline(dataset, policy)
    except DegenerateBaselineError as exc:
        logger.warning("value baseline degenerate (%s); using 0", exc)
        return 0.0


def _safe_gradient_baseline(batch: LoggedDataset, policy: LinearSoftmaxPolicy) -> float:
    try:
        return optimal_gradient_baseline(batch, policy)
    except DegenerateBaselineError as exc:
        logger.warning("gradient baseline degenerate (%s); using 0", exc)
        return 0.0


def train_full_batch(
    dataset: LoggedDataset,
    mode: BaselineMode,
    config: OptimizerConfig,
    value_oracle,
    initial_policy: LinearSoftmaxPolicy | None = None,
) -> TrainingReport:
    """Whole-dataset gradient ascent.

    Supported modes: zero baseline, self-normalized, and the
    estimator-variance-optimal baseline (re-solved on the full dataset
    every epoch). Each epoch record holds the test value *after* that
    epoch's update and the gradient variance measured at the pre-update
    policy; for the self-normalized mode the variance is that of its
    quotient-rule gradient terms and ``beta_used`` is None.
    """
    if mode.kind not in _FULL_BATCH_KINDS:
        raise ContractViolationError(
            f"full-batch training supports {_FULL_BATCH_KINDS}, got {mode.kind!r}"
        )
    policy = initial_policy or LinearSoftmaxPolicy.uniform(
        dataset.num_actions, dataset.context_dim
    )
    params = policy.weights.copy()
    state = AdamState(params.shape, config)
    records = []
    for epoch_index in range(config.epochs):
        policy = LinearSoftmaxPolicy(params)
        if mode.kind == KIND_ZERO:
            beta = 0.0
            gradient = baseline_ips_gradient(dataset, policy, beta)
            grad_var = gradient_sample_variance(dataset, policy, beta)
        elif mode.kind == KIND_ESTIMATOR_OPTIMAL:
            beta = _safe_value_baseline(dataset, policy)
            gradient = baseline_ips_gradient(dataset, policy, beta)
            grad_var = gradient_sample_variance(dataset, policy, beta)
        else:  # self-normalized
            beta = None
            estimate = snips_value(dataset, policy)
            gradient = snips_gradient(dataset, policy)
            # The quotient-rule per-sample terms are (r_i - V) grad pi_i /
            # (pi0_i * S); their spread is the residual variance scaled by S^2.
            grad_var = gradient_sample_variance(
                dataset, policy, estimate.value
            ) / estimate.normalizer**2
        params = adam_step(state, params, gradient, config.learning_rate_at(epoch_index))
        policy = LinearSoftmaxPolicy(params)
        records.append(
            EpochRecord(
                epoch=epoch_index + 1,
                test_policy_value=float(value_oracle(policy)),
                gradient_variance=grad_var,
                beta_used=beta,
            )
        )
    return TrainingReport(records=records, final_policy=policy)


def _epoch_batches(n: int, batch_size: int, rng) -> list[np.ndarray]:
    """Shuffled index partition; a tail of fewer than 2 samples merges backward."""
    order = rng.permutation(n)
    batches = [order[start : start + batch_size] for start in range(0, n, batch_size)]
    if len(batches) > 1 and len(batches[-1]) < 2:
        batches[-2] = np.concatenate([batches[-2], batches[-1]])
        batches.pop()
    return batches


def train_mini_batch(
    dataset: LoggedDataset,
    mode: BaselineMode,
    config: OptimizerConfig,
    value_oracle,
    seed: int = 0,
    initial_policy: LinearSoftmaxPolicy | None = None,
) -> TrainingReport:
    """Shuffled mini-batch gradient ascent.

    Supported modes: zero baseline, a fixed reward translation, and the
    gradient-variance-optimal baseline (re-solved on every batch). Epoch
    records average the per-batch gradient variances and baselines; the
    shuffle stream is derived from ``seed`` so that (seed, config) fixes
    the whole trajectory.
    """
    if mode.kind not in _MINI_BATCH_KINDS:
        raise ContractViolationError(
            f"mini-batch training supports {_MINI_BATCH_KINDS}, got {mode.kind!r}"
        )
    n = len(dataset)
    batch_size = n if config.batch_size == "full" else min(config.batch_size, n)
    policy = initial_policy or LinearSoftmaxPolicy.uniform(
        dataset.num_actions, dataset.context_dim
    )
    params = policy.weights.copy()
    state = AdamState(params.shape, config)
    shuffle_rng = substream(seed, STREAM_TRAIN)
    records = []
    for epoch_index in range(config.epochs):
        lr = config.learning_rate_at(epoch_index)
        batch_variances = []
        batch_betas = []
        for indices in _epoch_batches(n, batch_size, shuffle_rng):
            batch = dataset.subset(indices)
            policy = LinearSoftmaxPolicy(params)
            if mode.kind == KIND_ZERO:
                beta = 0.0
            elif mode.kind == KIND_FIXED:
                beta = mode.fixed_value
            else:
                beta = _safe_gradient_baseline(batch, policy)
            gradient = baseline_ips_gradient(batch, policy, beta)
            batch_variances.append(gradient_sample_variance(batch, policy, beta))
            batch_betas.append(beta)
            params = adam_step(state, params, gradient, lr)
        policy = LinearSoftmaxPolicy(params)
        records.append(
            EpochRecord(
                epoch=epoch_index + 1,
                test_policy_value=float(value_oracle(policy)),
                gradient_variance=float(np.mean(batch_variances)),
                beta_used=float(np.mean(batch_betas)),
            )
        )
    return TrainingReport(records=records, final_policy=policy)


@dataclass(frozen=True)
class LambdaSweepResult:
    best_lambda: float
    reports: dict  # lambda -> TrainingReport (trained on the train split)
    validation_values: dict  # lambda -> self-normalized estimate on held-out split


def _sweep_run(args):
    train_part, lam, config, value_oracle, seed = args
    report = train_mini_batch(
        train_part, BaselineMode.fixed(lam), config, value_oracle, seed=seed
    )
    return lam, report


def lambda_sweep(
    dataset: LoggedDataset,
    lambda_grid,
    config: OptimizerConfig,
    value_oracle,
    seed: int = 0,
    validation_fraction: float = 0.25,
    max_workers: int = 1,
) -> LambdaSweepResult:
    """Tune the fixed reward translation by held-out self-normalized value.

    Trains one mini-batch run per grid point on a train split, scores each
    final policy with the self-normalized estimator on the held-out logged
    split (no fresh contexts involved), and keeps the argmax; ties go to
    the earlier grid point. Grid points run in separate processes when
    ``max_workers > 1``, which requires a picklable ``value_oracle``.
    """
    grid = [float(lam) for lam in lambda_grid]
    if not grid:
        raise ContractViolationError("lambda grid must be nonempty")
    split_rng = substream(seed, STREAM_TRAIN, 1)
    train_part, validation_part = dataset.split(validation_fraction, split_rng)
    tasks = [(train_part, lam, config, value_oracle, seed) for lam in grid]
    if max_workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            trained = list(pool.map(_sweep_run, tasks))
    else:
        trained = [_sweep_run(task) for task in tasks]
    reports: dict[float, TrainingReport] = dict(trained)
    validation_values = {
        lam: snips_value(validation_part, report.final_policy).value
        for lam, report in reports.items()
    }
    best = max(grid, key=lambda lam: (validation_values[lam], -grid.index(lam)))
    return LambdaSweepResult(best, reports, validation_values)
