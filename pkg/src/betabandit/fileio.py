"""File formats and configuration.

Three CSV formats and one YAML config format, all designed for lossless
round trips:

* logged datasets: header ``x_0,...,x_{d-1},action,reward,propensity``,
  one interaction per row, floats written with full shortest-round-trip
  precision (well past the 12 significant digits the schema promises);
* linear policies: a one-line header carrying the two matrix dimensions,
  then one row of weights per action;
* tidy results: fixed column set ``experiment, estimator, seed, epoch,
  k_actions, inv_temperature, n_logged, metric_name, metric_value`` with a
  closed vocabulary of metric names — the only interface the figure
  tooling consumes.

Configs are YAML mappings validated against a complete default tree:
unknown keys are rejected with their dotted path, and the loaded result
always carries every default explicitly so that dumping it reproduces the
effective configuration byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import math

import numpy as np
import yaml

from .data import LoggedDataset
from .errors import CommonSupportError, ConfigError, DatasetParseError
from .policy import LinearSoftmaxPolicy

METRIC_NAMES = (
    "test_value",
    "grad_variance",
    "mse",
    "bias_sq",
    "est_variance",
    "rel_abs_error",
    "beta_used",
)

RESULT_COLUMNS = (
    "experiment",
    "estimator",
    "seed",
    "epoch",
    "k_actions",
    "inv_temperature",
    "n_logged",
    "metric_name",
    "metric_value",
)

_TRAILING_COLUMNS = ("action", "reward", "propensity")


def _fmt(value) -> str:
    """Lossless text for a float (shortest repr that round-trips)."""
    return repr(float(value))


# ---------------------------------------------------------------------------
# Logged datasets
# ---------------------------------------------------------------------------


def dataset_header(context_dim: int) -> list[str]:
    return [f"x_{i}" for i in range(context_dim)] + list(_TRAILING_COLUMNS)


def write_dataset(dataset: LoggedDataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(dataset_header(dataset.context_dim))
        for i in range(len(dataset)):
            writer.writerow(
                [_fmt(v) for v in dataset.contexts[i]]
                + [
                    str(int(dataset.actions[i])),
                    _fmt(dataset.rewards[i]),
                    _fmt(dataset.propensities[i]),
                ]
            )


def read_dataset(path, num_actions: int | None = None) -> LoggedDataset:
    """Parse a logged-interaction CSV; row numbers in errors are 1-based
    over data rows (the header is row 0).

    ``num_actions`` defaults to one past the largest action present.
    """
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetParseError("empty dataset file") from None
        for column in _TRAILING_COLUMNS:
            if column not in header:
                raise DatasetParseError("missing required column", column=column)
        context_dim = len(header) - len(_TRAILING_COLUMNS)
        expected = dataset_header(context_dim)
        if header != expected:
            raise DatasetParseError(
                f"header {header!r} does not match the schema {expected!r}"
            )
        contexts, actions, rewards, propensities = [], [], [], []
        for row_number, row in enumerate(reader, start=1):
            if len(row) != len(expected):
                raise DatasetParseError(
                    f"expected {len(expected)} fields, got {len(row)}", row=row_number
                )
            try:
                ctx = [float(cell) for cell in row[:context_dim]]
            except ValueError:
                raise DatasetParseError(
                    "context cell is not a number", row=row_number
                ) from None
            try:
                action = int(row[context_dim])
            except ValueError:
                raise DatasetParseError(
                    f"action {row[context_dim]!r} is not an integer",
                    row=row_number,
                    column="action",
                ) from None
            try:
                reward = float(row[context_dim + 1])
                propensity = float(row[context_dim + 2])
            except ValueError:
                raise DatasetParseError(
                    "reward/propensity cell is not a number", row=row_number
                ) from None
            if not all(math.isfinite(v) for v in ctx + [reward, propensity]):
                raise DatasetParseError("non-finite value", row=row_number)
            if action < 0:
                raise DatasetParseError(
                    f"action must be >= 0, got {action}", row=row_number, column="action"
                )
            if not 0.0 < propensity <= 1.0:
                raise CommonSupportError(
                    f"propensity {propensity!r} at row {row_number} violates the "
                    "common-support assumption (logged propensities must lie in (0, 1])"
                )
            contexts.append(ctx)
            actions.append(action)
            rewards.append(reward)
            propensities.append(propensity)
    if not contexts:
        raise DatasetParseError("dataset file has a header but no rows")
    if num_actions is None:
        num_actions = max(actions) + 1
    return LoggedDataset(
        contexts=np.array(contexts),
        actions=np.array(actions),
        rewards=np.array(rewards),
        propensities=np.array(propensities),
        num_actions=int(num_actions),
    )


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------


def write_policy(policy: LinearSoftmaxPolicy, path) -> None:
    """Weights as CSV: a header row with (num_actions, context_dim), then
    one weight row per action."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([str(policy.num_actions), str(policy.context_dim)])
        for row in policy.weights:
            writer.writerow([_fmt(v) for v in row])


def read_policy(path) -> LinearSoftmaxPolicy:
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
            num_actions, context_dim = (int(cell) for cell in header)
        except (StopIteration, ValueError):
            raise DatasetParseError(
                "policy file must start with a 'num_actions,context_dim' header"
            ) from None
        rows = []
        for row_number, row in enumerate(reader, start=1):
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                raise DatasetParseError(
                    "weight cell is not a number", row=row_number
                ) from None
    weights = np.array(rows, dtype=float)
    if weights.shape != (num_actions, context_dim):
        raise DatasetParseError(
            f"policy body has shape {weights.shape}, header promised "
            f"({num_actions}, {context_dim})"
        )
    return LinearSoftmaxPolicy(weights)


# ---------------------------------------------------------------------------
# Tidy results
# ---------------------------------------------------------------------------


def result_row(
    experiment: str,
    estimator: str,
    seed: int,
    epoch: int,
    k_actions: int,
    inv_temperature: float,
    n_logged: int,
    metric_name: str,
    metric_value: float,
) -> dict:
    if metric_name not in METRIC_NAMES:
        raise ConfigError(f"unknown metric name {metric_name!r}")
    return {
        "experiment": experiment,
        "estimator": estimator,
        "seed": int(seed),
        "epoch": int(epoch),
        "k_actions": int(k_actions),
        "inv_temperature": float(inv_temperature),
        "n_logged": int(n_logged),
        "metric_name": metric_name,
        "metric_value": float(metric_value),
    }


def write_results(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row["experiment"],
                    row["estimator"],
                    str(row["seed"]),
                    str(row["epoch"]),
                    str(row["k_actions"]),
                    _fmt(row["inv_temperature"]),
                    str(row["n_logged"]),
                    row["metric_name"],
                    _fmt(row["metric_value"]),
                ]
            )


def training_result_rows(
    report,
    *,
    experiment: str,
    estimator: str,
    seed: int,
    k_actions: int,
    inv_temperature: float,
    n_logged: int,
) -> list[dict]:
    """Per-epoch test_value / grad_variance / beta_used rows for one run.

    A run without a baseline (the self-normalized objective) records NaN
    for beta_used so the row set stays rectangular across estimators.
    """
    rows = []
    for record in report.records:
        for metric, value in (
            ("test_value", record.test_policy_value),
            ("grad_variance", record.gradient_variance),
            ("beta_used", float("nan") if record.beta_used is None else record.beta_used),
        ):
            rows.append(
                result_row(
                    experiment,
                    estimator,
                    seed,
                    record.epoch,
                    k_actions,
                    inv_temperature,
                    n_logged,
                    metric,
                    value,
                )
            )
    return rows


def ope_result_rows(ope_rows, *, experiment: str, seed: int) -> list[dict]:
    """Aggregate metrics per (estimator, cell): mse, bias_sq, est_variance,
    and the replication-mean rel_abs_error."""
    rows = []
    for cell in ope_rows:
        mean_rel_err = float(
            np.mean(np.abs(cell.estimates - cell.true_value)) / abs(cell.true_value)
        )
        for metric, value in (
            ("mse", cell.mse),
            ("bias_sq", cell.bias_squared),
            ("est_variance", cell.variance),
            ("rel_abs_error", mean_rel_err),
        ):
            rows.append(
                result_row(
                    experiment,
                    cell.estimator,
                    seed,
                    0,
                    cell.num_actions,
                    cell.inverse_temperature,
                    cell.dataset_size,
                    metric,
                    value,
                )
            )
    return rows


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

CONFIG_DEFAULTS = {
    "experiment": "experiment",
    "seed": 0,
    "threads": 1,
    "environment": {
        "num_actions": 10,
        "inverse_temperature": 1.0,
        "dataset_size": 10_000,
        "context_dim": 5,
    },
    "optimizer": {
        "base_learning_rate": 0.01,
        "epochs": 50,
        "batch_size": 1024,
        "decay_rate": 0.01,
        "beta1": 0.9,
        "beta2": 0.999,
        "epsilon": 1e-8,
    },
    "estimators": ["ips", "snips", "beta-ips"],
    "train": {
        "test_contexts": 10_000,
        "seeds": [0],
    },
    "ope": {
        "action_space_sizes": [10, 100],
        "inverse_temperatures": [-5.0, -1.0, 1.0, 5.0],
        "dataset_sizes": [100, 1_000, 10_000],
        "replications": 100,
        "true_value_contexts": 1_000_000,
        "target_train_size": 10_000,
        "target_epochs": 20,
        "target_batch_size": 1024,
        "target_learning_rate": 0.01,
    },
    "sweep": {
        "lambda_grid": [0.0, 0.25, 0.5, 0.75, 1.0],
        "validation_fraction": 0.25,
    },
    "evaluate": {
        "dataset_path": None,
        "policy_path": None,
        "reference_value": None,
    },
}


def _merge_config(defaults: dict, overrides: dict, prefix: str = "") -> dict:
    merged = {}
    for key, default in defaults.items():
        if key in overrides:
            value = overrides[key]
            if isinstance(default, dict) and value is not None:
                if not isinstance(value, dict):
                    raise ConfigError(f"config key '{prefix}{key}' must be a mapping")
                value = _merge_config(default, value, prefix=f"{prefix}{key}.")
            merged[key] = value
        else:
            merged[key] = {k: v for k, v in default.items()} if isinstance(
                default, dict
            ) else default
    for key in overrides:
        if key not in defaults:
            raise ConfigError(f"unknown config key '{prefix}{key}'")
    return merged


def load_config(path) -> dict:
    """Read a YAML config and return the effective configuration: every
    default filled in, every unknown key rejected."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            raw = yaml.safe_load(handle)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    return _merge_config(CONFIG_DEFAULTS, raw)


def effective_config_yaml(config: dict) -> str:
    return yaml.safe_dump(config, sort_keys=False, default_flow_style=False)


def config_digest(config: dict) -> str:
    return hashlib.sha256(effective_config_yaml(config).encode("utf-8")).hexdigest()


def dump_config(config: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(effective_config_yaml(config))


def read_results(path) -> list[dict]:
    """Read a tidy results CSV back into typed row dicts (for tests/tools)."""
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
            raise DatasetParseError(
                f"results header {reader.fieldnames!r} does not match {RESULT_COLUMNS!r}"
            )
        rows = []
        for raw in reader:
            rows.append(
                {
                    "experiment": raw["experiment"],
                    "estimator": raw["estimator"],
                    "seed": int(raw["seed"]),
                    "epoch": int(raw["epoch"]),
                    "k_actions": int(raw["k_actions"]),
                    "inv_temperature": float(raw["inv_temperature"]),
                    "n_logged": int(raw["n_logged"]),
                    "metric_name": raw["metric_name"],
                    "metric_value": float(raw["metric_value"]),
                }
            )
    return rows
