"""Off-policy value and gradient estimators with baseline corrections.

All estimators consume a :class:`~betabandit.data.LoggedDataset` collected
under a behavior policy and a target :class:`LinearSoftmaxPolicy`, and are
built from the per-sample importance weights w_i = pi(a_i|x_i) / pi0(a_i|x_i).

Value estimators
----------------
* ``ips_value``            mean of w_i r_i (unbiased, often high variance).
* ``snips_value``          sum(w r) / sum(w), the self-normalized ratio form
                           (asymptotically unbiased, translation invariant).
* ``dr_value``             doubly robust: importance-weighted residual against
                           a reward model plus the model's direct estimate.
* ``baseline_ips_value``   b + mean(w (r - b)) for a scalar baseline b;
                           unbiased for every fixed b because E[w] = 1.

Closed-form baselines
---------------------
* ``optimal_value_baseline``      minimizes the estimator's own variance:
                                  b* = sum((w^2 - w) r) / sum(w^2 - w).
* ``optimal_gradient_baseline``   minimizes gradient variance over a batch:
                                  b* = sum(g r) / sum(g) with
                                  g_i = ||grad pi(a_i|x_i)||^2 / pi0(a_i|x_i)^2.
* ``optimal_onpolicy_baseline``   the on-policy analogue weighted by
                                  ||grad log pi||^2 (for data logged by the
                                  target policy itself).

Gradient estimators mirror the values; SNIPS's gradient only exists over a
full dataset because the ratio does not decompose into per-batch sums.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import LoggedDataset
from .errors import (
    ContractViolationError,
    DegenerateBaselineError,
    DegenerateSupportError,
)
from .policy import LinearSoftmaxPolicy

logger = logging.getLogger("betabandit")

_DENOMINATOR_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# Reward models (for doubly robust estimation)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantReward:
    """Reward model that predicts the same scalar for every (context, action)."""

    value: float

    def predict(self, contexts: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return np.full(len(actions), float(self.value))

    def predict_all(self, contexts: np.ndarray, num_actions: int) -> np.ndarray:
        return np.full((contexts.shape[0], num_actions), float(self.value))


@dataclass(frozen=True)
class TabularReward:
    """Per-action mean-reward table, context independent."""

    values: np.ndarray  # (num_actions,)

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 1 or not np.all(np.isfinite(self.values)):
            raise ContractViolationError("tabular reward values must be a finite vector")

    def predict(self, contexts: np.ndarray, actions: np.ndarray) -> np.ndarray:
        if actions.max(initial=-1) >= len(self.values):
            raise ContractViolationError(
                f"reward model covers {len(self.values)} actions, "
                f"dataset references action {int(actions.max())}"
            )
        return self.values[actions]

    def predict_all(self, contexts: np.ndarray, num_actions: int) -> np.ndarray:
        if num_actions != len(self.values):
            raise ContractViolationError(
                f"reward model covers {len(self.values)} actions, policy has {num_actions}"
            )
        return np.tile(self.values, (contexts.shape[0], 1))


def fit_tabular_reward(dataset: LoggedDataset) -> TabularReward:
    """Per-action empirical mean rewards; unobserved actions get the grand mean."""
    _require_nonempty(dataset)
    values = np.full(dataset.num_actions, float(dataset.rewards.mean()))
    for a in range(dataset.num_actions):
        mask = dataset.actions == a
        if mask.any():
            values[a] = float(dataset.rewards[mask].mean())
    return TabularReward(values)


# ---------------------------------------------------------------------------
# Shared per-sample machinery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimateBreakdown:
    """A value estimate plus its per-sample diagnostics."""

    value: float
    weights: np.ndarray  # importance weights w_i, shape (n,)
    normalizer: float  # S = mean of weights
    beta_used: float | None
    sample_count: int
    degenerate_fallback: bool = False


def _require_nonempty(dataset: LoggedDataset) -> None:
    if len(dataset) == 0:
        raise ContractViolationError("estimator called on an empty dataset")


def _policy_stats(dataset: LoggedDataset, policy: LinearSoftmaxPolicy):
    """(probs, pi_a, w): target probabilities, chosen-action probs, weights."""
    probs = policy.probabilities_matrix(dataset.contexts)
    pi_a = probs[np.arange(len(dataset)), dataset.actions]
    weights = pi_a / dataset.propensities
    return probs, pi_a, weights


def _weighted_grad_sum(
    policy: LinearSoftmaxPolicy,
    contexts: np.ndarray,
    actions: np.ndarray,
    coeffs: np.ndarray,
    probs: np.ndarray,
) -> np.ndarray:
    """sum_i coeffs_i * grad pi(a_i|x_i), without forming per-sample tensors.

    Uses grad pi(a|x) = pi(a|x) * outer(onehot(a) - probs, x): the one-hot part
    becomes a scatter-add, the probs part a matrix product.
    """
    pi_a = probs[np.arange(len(actions)), actions]
    alpha = coeffs * pi_a
    scaled_ctx = alpha[:, None] * contexts
    grad = np.zeros_like(policy.weights)
    np.add.at(grad, actions, scaled_ctx)
    grad -= probs.T @ scaled_ctx
    return grad


def _score_norms(probs: np.ndarray, actions: np.ndarray, contexts: np.ndarray):
    """(||onehot(a) - probs||^2, ||x||^2) per sample.

    ||grad pi(a|x)||_F^2 factorizes as pi(a|x)^2 * the product of these,
    because the gradient is a rank-one outer product.
    """
    pi_a = probs[np.arange(len(actions)), actions]
    score_sq = 1.0 - 2.0 * pi_a + np.sum(probs**2, axis=1)
    ctx_sq = np.sum(contexts**2, axis=1)
    return score_sq, ctx_sq


# ---------------------------------------------------------------------------
# Value estimators
# ---------------------------------------------------------------------------


def ips_value(dataset: LoggedDataset, policy: LinearSoftmaxPolicy) -> EstimateBreakdown:
    """Importance-weighted mean reward, mean(w_i r_i)."""
    _require_nonempty(dataset)
    _, _, w = _policy_stats(dataset, policy)
    return EstimateBreakdown(
        value=float(np.mean(w * dataset.rewards)),
        weights=w,
        normalizer=float(np.mean(w)),
        beta_used=0.0,
        sample_count=len(dataset),
    )


def snips_value(dataset: LoggedDataset, policy: LinearSoftmaxPolicy) -> EstimateBreakdown:
    """Self-normalized estimate sum(w r) / sum(w)."""
    _require_nonempty(dataset)
    _, _, w = _policy_stats(dataset, policy)
    denom = float(np.sum(w))
    if denom <= 0.0:
        raise DegenerateSupportError("all importance weights are zero")
    return EstimateBreakdown(
        value=float(np.sum(w * dataset.rewards) / denom),
        weights=w,
        normalizer=float(np.mean(w)),
        beta_used=None,
        sample_count=len(dataset),
    )


def dr_value(
    dataset: LoggedDataset, policy: LinearSoftmaxPolicy, reward_model
) -> EstimateBreakdown:
    """Doubly robust estimate.

    mean over samples of
        w_i (r_i - rhat(a_i, x_i)) + sum_a pi(a|x_i) rhat(a, x_i),
    with the direct term summed exactly over the whole action space.
    """
    _require_nonempty(dataset)
    probs, _, w = _policy_stats(dataset, policy)
    rhat_chosen = reward_model.predict(dataset.contexts, dataset.actions)
    rhat_all = reward_model.predict_all(dataset.contexts, policy.num_actions)
    residual = w * (dataset.rewards - rhat_chosen)
    direct = np.sum(probs * rhat_all, axis=1)
    return EstimateBreakdown(
        value=float(np.mean(residual + direct)),
        weights=w,
        normalizer=float(np.mean(w)),
        beta_used=None,
        sample_count=len(dataset),
    )


def baseline_ips_value(
    dataset: LoggedDataset, policy: LinearSoftmaxPolicy, baseline: float
) -> EstimateBreakdown:
    """Baseline-corrected estimate baseline + mean(w (r - baseline)).

    Unbiased for any fixed baseline: subtracting the baseline from the
    rewards removes mean(w) * baseline in expectation, and adding it back
    restores the estimand because importance weights average to 1.
    """
    _require_nonempty(dataset)
    if not np.isfinite(baseline):
        raise ContractViolationError(f"baseline must be finite, got {baseline}")
    _, _, w = _policy_stats(dataset, policy)
    value = baseline + float(np.mean(w * (dataset.rewards - baseline)))
    return EstimateBreakdown(
        value=value,
        weights=w,
        normalizer=float(np.mean(w)),
        beta_used=float(baseline),
        sample_count=len(dataset),
    )


# ---------------------------------------------------------------------------
# Closed-form baselines
# ---------------------------------------------------------------------------


def optimal_value_baseline(dataset: LoggedDataset, policy: LinearSoftmaxPolicy) -> float:
    """Estimator-variance-minimizing baseline, sum((w^2 - w) r) / sum(w^2 - w).

    This is the plug-in sample version of the population optimum; it is
    biased at finite n (ratio of sample means) with the bias vanishing
    asymptotically. Raises :class:`DegenerateBaselineError` when the
    denominator is (near-)zero, e.g. all weights in {0, 1}.
    """
    _require_nonempty(dataset)
    _, _, w = _policy_stats(dataset, policy)
    coeff = w * w - w
    denom = float(np.mean(coeff))
    if abs(denom) < _DENOMINATOR_FLOOR:
        raise DegenerateBaselineError(
            f"mean(w^2 - w) = {denom!r} is below {_DENOMINATOR_FLOOR}"
        )
    return float(np.mean(coeff * dataset.rewards) / denom)


def optimal_gradient_baseline(batch: LoggedDataset, policy: LinearSoftmaxPolicy) -> float:
    """Gradient-variance-minimizing baseline over a batch.

    Weighted mean of rewards with weights g_i = ||grad pi(a_i|x_i)||^2 /
    pi0(a_i|x_i)^2; note the gradient of pi, not of log pi.
    """
    _require_nonempty(batch)
    probs, _, w = _policy_stats(batch, policy)
    score_sq, ctx_sq = _score_norms(probs, batch.actions, batch.contexts)
    g = (w**2) * score_sq * ctx_sq
    denom = float(np.sum(g))
    if denom <= 0.0 or float(np.mean(g)) < _DENOMINATOR_FLOOR:
        raise DegenerateBaselineError("all gradient-norm weights are (near) zero")
    return float(np.sum(g * batch.rewards) / denom)


def optimal_onpolicy_baseline(dataset: LoggedDataset, policy: LinearSoftmaxPolicy) -> float:
    """On-policy optimal baseline: rewards weighted by ||grad log pi(a_i|x_i)||^2.

    Only meaningful when the data was sampled by ``policy`` itself.
    """
    _require_nonempty(dataset)
    probs, _, _ = _policy_stats(dataset, policy)
    score_sq, ctx_sq = _score_norms(probs, dataset.actions, dataset.contexts)
    h = score_sq * ctx_sq
    denom = float(np.sum(h))
    if denom <= 0.0 or float(np.mean(h)) < _DENOMINATOR_FLOOR:
        raise DegenerateBaselineError("all log-gradient norms are (near) zero")
    return float(np.sum(h * dataset.rewards) / denom)


# ---------------------------------------------------------------------------
# Gradient estimators
# ---------------------------------------------------------------------------


def ips_gradient(batch: LoggedDataset, policy: LinearSoftmaxPolicy) -> np.ndarray:
    """mean_i of r_i * grad pi(a_i|x_i) / pi0(a_i|x_i); shape like the weights."""
    _require_nonempty(batch)
    probs = policy.probabilities_matrix(batch.contexts)
    coeffs = batch.rewards / batch.propensities
    return _weighted_grad_sum(policy, batch.contexts, batch.actions, coeffs, probs) / len(batch)


def baseline_ips_gradient(
    batch: LoggedDataset, policy: LinearSoftmaxPolicy, baseline: float
) -> np.ndarray:
    """mean_i of (r_i - baseline) * grad pi(a_i|x_i) / pi0(a_i|x_i)."""
    _require_nonempty(batch)
    if not np.isfinite(baseline):
        raise ContractViolationError(f"baseline must be finite, got {baseline}")
    probs = policy.probabilities_matrix(batch.contexts)
    coeffs = (batch.rewards - baseline) / batch.propensities
    return _weighted_grad_sum(policy, batch.contexts, batch.actions, coeffs, probs) / len(batch)


def dr_gradient(
    batch: LoggedDataset, policy: LinearSoftmaxPolicy, reward_model
) -> np.ndarray:
    """Gradient of the doubly robust objective.

    mean_i of (r_i - rhat(a_i, x_i)) grad pi(a_i|x_i) / pi0(a_i|x_i)
            + sum_a rhat(a, x_i) grad pi(a|x_i).
    The direct-term sum is computed explicitly over all actions; for a
    constant reward model it cancels to zero because the action
    probabilities sum to one for every context.
    """
    _require_nonempty(batch)
    probs = policy.probabilities_matrix(batch.contexts)
    rhat_chosen = reward_model.predict(batch.contexts, batch.actions)
    rhat_all = reward_model.predict_all(batch.contexts, policy.num_actions)
    coeffs = (batch.rewards - rhat_chosen) / batch.propensities
    grad = _weighted_grad_sum(policy, batch.contexts, batch.actions, coeffs, probs)
    # Direct term: sum_i sum_a rhat(a, x_i) grad pi(a|x_i)
    #   = sum_i sum_a rhat(a, x_i) pi(a|x_i) outer(onehot(a) - probs_i, x_i).
    weighted = probs * rhat_all  # (n, K): pi(a|x_i) rhat(a, x_i)
    grad += weighted.T @ batch.contexts
    grad -= probs.T @ (np.sum(weighted, axis=1)[:, None] * batch.contexts)
    return grad / len(batch)


def snips_gradient(dataset: LoggedDataset, policy: LinearSoftmaxPolicy) -> np.ndarray:
    """Gradient of the self-normalized estimate, in the stable quotient form.

    With A = sum_i r_i grad pi_i / pi0_i, B = sum_i w_i, C = sum_i w_i r_i and
    D = sum_i grad pi_i / pi0_i, returns (A B - C D) / B^2. Defined over the
    full dataset only: the ratio does not decompose into mini-batch sums.
    """
    _require_nonempty(dataset)
    probs, _, w = _policy_stats(dataset, policy)
    sum_w = float(np.sum(w))
    if sum_w <= 0.0:
        raise DegenerateSupportError("all importance weights are zero")
    inv_prop = 1.0 / dataset.propensities
    grad_r = _weighted_grad_sum(
        policy, dataset.contexts, dataset.actions, dataset.rewards * inv_prop, probs
    )
    grad_1 = _weighted_grad_sum(policy, dataset.contexts, dataset.actions, inv_prop, probs)
    sum_wr = float(np.sum(w * dataset.rewards))
    return (grad_r * sum_w - sum_wr * grad_1) / (sum_w * sum_w)


# ---------------------------------------------------------------------------
# Empirical variance diagnostics
# ---------------------------------------------------------------------------


def gradient_sample_variance(
    batch: LoggedDataset, policy: LinearSoftmaxPolicy, baseline: float
) -> float:
    """Summed componentwise sample variance of per-sample gradient terms.

    The terms are t_i = (r_i - baseline) grad pi(a_i|x_i) / pi0(a_i|x_i);
    the result is the sum over all K*d components of the unbiased (n-1
    divisor) sample variance of {t_i}. Uses the rank-one factorization of
    ||t_i||^2, so no per-sample gradient tensors are materialized.
    """
    n = len(batch)
    if n < 2:
        raise ContractViolationError("gradient variance needs at least 2 samples")
    probs, _, w = _policy_stats(batch, policy)
    score_sq, ctx_sq = _score_norms(probs, batch.actions, batch.contexts)
    resid = batch.rewards - baseline
    sq_norms = (w * resid) ** 2 * score_sq * ctx_sq
    coeffs = resid / batch.propensities
    mean_term = (
        _weighted_grad_sum(policy, batch.contexts, batch.actions, coeffs, probs) / n
    )
    total = float(np.sum(sq_norms)) - n * float(np.sum(mean_term**2))
    return max(total / (n - 1), 0.0)


def estimator_sample_variance(values) -> float:
    """Unbiased sample variance of replicated estimates."""
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        raise ContractViolationError("estimator variance needs at least 2 replications")
    return float(np.var(arr, ddof=1))


# ---------------------------------------------------------------------------
# Estimator selection
# ---------------------------------------------------------------------------

KIND_ZERO = "zero"
KIND_FIXED = "fixed"
KIND_GRAD_OPTIMAL = "grad_optimal"
KIND_ESTIMATOR_OPTIMAL = "estimator_optimal"
KIND_SELF_NORMALIZED = "self_normalized"
KIND_DOUBLY_ROBUST = "doubly_robust"

_ALL_KINDS = (
    KIND_ZERO,
    KIND_FIXED,
    KIND_GRAD_OPTIMAL,
    KIND_ESTIMATOR_OPTIMAL,
    KIND_SELF_NORMALIZED,
    KIND_DOUBLY_ROBUST,
)


@dataclass(frozen=True)
class BaselineMode:
    """How the additive baseline (or its substitute) is chosen.

    ``zero`` is plain IPS, ``fixed`` carries a constant reward translation
    (the BanditNet hyper-parameter), ``grad_optimal`` / ``estimator_optimal``
    plug in the closed-form solvers, ``self_normalized`` switches to the
    ratio estimator, and ``doubly_robust`` delegates to a reward model
    (fit on the data at hand when none is attached).
    """

    kind: str
    fixed_value: float | None = None
    reward_model: ConstantReward | TabularReward | None = None

    def __post_init__(self):
        if self.kind not in _ALL_KINDS:
            raise ContractViolationError(f"unknown baseline mode {self.kind!r}")
        if self.kind == KIND_FIXED:
            if self.fixed_value is None or not np.isfinite(self.fixed_value):
                raise ContractViolationError("fixed mode requires a finite value")

    # Constructors ---------------------------------------------------------
    @classmethod
    def zero(cls):
        return cls(KIND_ZERO)

    @classmethod
    def fixed(cls, value: float):
        return cls(KIND_FIXED, fixed_value=float(value))

    @classmethod
    def grad_optimal(cls):
        return cls(KIND_GRAD_OPTIMAL)

    @classmethod
    def estimator_optimal(cls):
        return cls(KIND_ESTIMATOR_OPTIMAL)

    @classmethod
    def self_normalized(cls):
        return cls(KIND_SELF_NORMALIZED)

    @classmethod
    def doubly_robust(cls, reward_model=None):
        return cls(KIND_DOUBLY_ROBUST, reward_model=reward_model)

    # Presentation ----------------------------------------------------------
    @property
    def label(self) -> str:
        """Stable name used in results files and figures."""
        if self.kind == KIND_ZERO:
            return "ips"
        if self.kind == KIND_FIXED:
            return f"banditnet:{self.fixed_value:g}"
        if self.kind == KIND_GRAD_OPTIMAL:
            return "beta-ips-grad"
        if self.kind == KIND_ESTIMATOR_OPTIMAL:
            return "beta-ips"
        if self.kind == KIND_SELF_NORMALIZED:
            return "snips"
        if isinstance(self.reward_model, ConstantReward):
            return f"dr:const:{self.reward_model.value:g}"
        return "dr"

    @classmethod
    def parse(cls, spec: str) -> "BaselineMode":
        """Parse a results/config label back into a mode."""
        text = spec.strip().lower()
        if text == "ips":
            return cls.zero()
        if text == "snips":
            return cls.self_normalized()
        if text == "beta-ips":
            return cls.estimator_optimal()
        if text == "beta-ips-grad":
            return cls.grad_optimal()
        if text.startswith("banditnet:"):
            return cls.fixed(float(text.split(":", 1)[1]))
        if text in ("dr", "dr:tabular"):
            return cls.doubly_robust()
        if text.startswith("dr:const:"):
            return cls.doubly_robust(ConstantReward(float(text.split(":", 2)[2])))
        raise ContractViolationError(f"unknown estimator spec {spec!r}")


def apply_estimator(
    dataset: LoggedDataset, policy: LinearSoftmaxPolicy, mode: BaselineMode
) -> EstimateBreakdown:
    """Evaluate one estimator on a dataset.

    The closed-form baseline modes fall back to a zero baseline (plain IPS)
    with a logged warning when their denominator is degenerate; the fallback
    is flagged on the returned breakdown.
    """
    if mode.kind == KIND_ZERO:
        return ips_value(dataset, policy)
    if mode.kind == KIND_FIXED:
        return baseline_ips_value(dataset, policy, mode.fixed_value)
    if mode.kind == KIND_SELF_NORMALIZED:
        return snips_value(dataset, policy)
    if mode.kind == KIND_DOUBLY_ROBUST:
        model = mode.reward_model or fit_tabular_reward(dataset)
        return dr_value(dataset, policy, model)
    solver = (
        optimal_value_baseline
        if mode.kind == KIND_ESTIMATOR_OPTIMAL
        else optimal_gradient_baseline
    )
    try:
        baseline = solver(dataset, policy)
    except DegenerateBaselineError as exc:
        logger.warning("baseline solver degenerate (%s); falling back to 0", exc)
        breakdown = baseline_ips_value(dataset, policy, 0.0)
        return EstimateBreakdown(
            value=breakdown.value,
            weights=breakdown.weights,
            normalizer=breakdown.normalizer,
            beta_used=0.0,
            sample_count=breakdown.sample_count,
            degenerate_fallback=True,
        )
    return baseline_ips_value(dataset, policy, baseline)
