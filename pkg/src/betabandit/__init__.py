"""Baseline-corrected off-policy estimation and learning for contextual bandits.

The package provides: logged-data containers, a linear softmax policy with
exact probability gradients, importance-sampling value/gradient estimators
with closed-form variance-optimal additive baselines, Adam-based full-batch
and mini-batch training loops, a synthetic Gaussian-context environment
with a temperature-controlled logging policy, a replicated estimator
accuracy harness, and CSV/YAML plumbing plus a CLI tying them together.
"""

from .data import LoggedDataset, LoggedInteraction
from .errors import (
    CommonSupportError,
    ConfigError,
    ContractViolationError,
    DatasetParseError,
    DegenerateBaselineError,
    DegenerateSupportError,
    NumericError,
)
from .estimators import (
    BaselineMode,
    ConstantReward,
    EstimateBreakdown,
    TabularReward,
    apply_estimator,
    baseline_ips_gradient,
    baseline_ips_value,
    dr_gradient,
    dr_value,
    estimator_sample_variance,
    fit_tabular_reward,
    gradient_sample_variance,
    ips_gradient,
    ips_value,
    optimal_gradient_baseline,
    optimal_onpolicy_baseline,
    optimal_value_baseline,
    snips_gradient,
    snips_value,
)
from .evaluation import (
    LoggedEvaluationRecord,
    OpeExperimentConfig,
    OpeResultRow,
    evaluate_on_logged_dataset,
    evaluate_on_logged_file,
    relative_absolute_error,
    run_ope_experiment,
    train_target_policy,
)
from .learning import (
    AdamState,
    EpochRecord,
    LambdaSweepResult,
    OptimizerConfig,
    TrainingReport,
    adam_step,
    lambda_sweep,
    train_full_batch,
    train_mini_batch,
)
from .policy import LinearSoftmaxPolicy, stable_softmax
from .rngs import (
    STREAM_DATASET,
    STREAM_ENV,
    STREAM_TEST_CONTEXTS,
    STREAM_TRAIN,
    STREAM_TRUE_VALUE,
    substream,
)
from .simulator import (
    Environment,
    EnvironmentConfig,
    generate_environment,
    generate_logged_dataset,
    logging_policy_probs,
    policy_value_on_contexts,
    true_policy_value,
)

__version__ = "0.1.0"

__all__ = [
    "LoggedDataset",
    "LoggedInteraction",
    "CommonSupportError",
    "ConfigError",
    "ContractViolationError",
    "DatasetParseError",
    "DegenerateBaselineError",
    "DegenerateSupportError",
    "NumericError",
    "BaselineMode",
    "ConstantReward",
    "EstimateBreakdown",
    "TabularReward",
    "apply_estimator",
    "baseline_ips_gradient",
    "baseline_ips_value",
    "dr_gradient",
    "dr_value",
    "estimator_sample_variance",
    "fit_tabular_reward",
    "gradient_sample_variance",
    "ips_gradient",
    "ips_value",
    "optimal_gradient_baseline",
    "optimal_onpolicy_baseline",
    "optimal_value_baseline",
    "snips_gradient",
    "snips_value",
    "LoggedEvaluationRecord",
    "OpeExperimentConfig",
    "OpeResultRow",
    "evaluate_on_logged_dataset",
    "evaluate_on_logged_file",
    "relative_absolute_error",
    "run_ope_experiment",
    "train_target_policy",
    "AdamState",
    "EpochRecord",
    "LambdaSweepResult",
    "OptimizerConfig",
    "TrainingReport",
    "adam_step",
    "lambda_sweep",
    "train_full_batch",
    "train_mini_batch",
    "LinearSoftmaxPolicy",
    "stable_softmax",
    "STREAM_DATASET",
    "STREAM_ENV",
    "STREAM_TEST_CONTEXTS",
    "STREAM_TRAIN",
    "STREAM_TRUE_VALUE",
    "substream",
    "Environment",
    "EnvironmentConfig",
    "generate_environment",
    "generate_logged_dataset",
    "logging_policy_probs",
    "policy_value_on_contexts",
    "true_policy_value",
]
