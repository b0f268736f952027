"""
A tour of the off-policy value estimators
=========================================

Builds a small logged bandit dataset by hand, then walks through every
estimator the library ships: plain inverse-propensity scoring, its
self-normalized variant, the doubly robust estimator, and
baseline-corrected IPS with the closed-form variance-optimal baseline.
"""

import numpy as np

from betabandit import (
    BaselineMode,
    ConstantReward,
    LinearSoftmaxPolicy,
    LoggedDataset,
    apply_estimator,
    baseline_ips_value,
    dr_value,
    fit_tabular_reward,
    ips_value,
    optimal_value_baseline,
    snips_value,
)

# ---------------------------------------------------------------------------
# A logged dataset is four aligned columns: context, chosen action, observed
# reward, and the logging policy's recorded propensity for that choice.
rng = np.random.default_rng(7)
n, num_actions, context_dim = 400, 4, 3
contexts = rng.normal(size=(n, context_dim))
actions = rng.integers(0, num_actions, n)
propensities = rng.uniform(0.1, 1.0, n)
rewards = (rng.uniform(size=n) < 0.3 + 0.1 * actions).astype(float)
dataset = LoggedDataset(contexts, actions, rewards, propensities, num_actions)
print(f"logged dataset: {len(dataset)} interactions, {num_actions} actions")
print(f"average logged reward: {dataset.rewards.mean():.4f}")

# The policy we want to value was never deployed; estimators re-weight the
# log through the importance ratio pi(a|x) / pi0(a|x).
policy = LinearSoftmaxPolicy(rng.normal(size=(num_actions, context_dim)))

# ---------------------------------------------------------------------------
# The unbiased workhorse and its self-normalized cousin.
ips = ips_value(dataset, policy)
snips = snips_value(dataset, policy)
print(f"\nips value:   {ips.value:.4f}  (mean importance weight {ips.normalizer:.3f})")
print(f"snips value: {snips.value:.4f}  (= ips / mean weight)")

# ---------------------------------------------------------------------------
# Baseline correction: subtract a constant before weighting, add it back.
# Any fixed baseline keeps the estimator unbiased; the closed-form choice
# minimizes its variance.
best_beta = optimal_value_baseline(dataset, policy)
for beta in (0.0, dataset.rewards.mean(), best_beta):
    corrected = baseline_ips_value(dataset, policy, beta)
    print(f"beta-ips with beta={beta:+.4f}: {corrected.value:.4f}")

# ---------------------------------------------------------------------------
# Doubly robust uses a reward model instead of a constant. With a constant
# model it collapses to beta-ips; with a fitted per-action model it can do
# better when the model captures real structure.
constant_dr = dr_value(dataset, policy, ConstantReward(float(best_beta)))
fitted_dr = dr_value(dataset, policy, fit_tabular_reward(dataset))
print(f"\ndr with constant model at beta*: {constant_dr.value:.4f} (same as beta-ips)")
print(f"dr with fitted per-action model: {fitted_dr.value:.4f}")

# ---------------------------------------------------------------------------
# The same estimators are addressable by label, which is how config files
# and the results CSV name them.
print()
for label in ("ips", "snips", "beta-ips", "banditnet:0.35", "dr:tabular"):
    estimate = apply_estimator(dataset, policy, BaselineMode.parse(label))
    shown = "-" if estimate.beta_used is None else f"{estimate.beta_used:+.4f}"
    print(f"{label:>14s}: value={estimate.value:.4f}  baseline={shown}")
