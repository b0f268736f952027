"""Command-line surface.

Five subcommands tie the simulator, trainers, and evaluation harness to the
file formats: ``simulate`` writes a logged dataset, ``train`` / ``ope`` /
``sweep`` write tidy results CSVs, and ``evaluate`` scores estimators on an
existing dataset + policy file pair. Every command takes ``--config`` (YAML,
validated strictly), with ``--seed`` / ``--threads`` overrides, and prints
the sha256 digest of the effective configuration to stderr so runs can be
matched to their exact settings. Exit codes: 0 success, 2 configuration or
input-format error, 1 runtime numeric failure.
"""

from __future__ import annotations

import argparse
import functools
import sys
from concurrent.futures import ProcessPoolExecutor

from .errors import (
    CommonSupportError,
    ConfigError,
    ContractViolationError,
    DatasetParseError,
    DegenerateSupportError,
    NumericError,
)
from .estimators import (
    KIND_DOUBLY_ROBUST,
    KIND_ESTIMATOR_OPTIMAL,
    KIND_SELF_NORMALIZED,
    KIND_ZERO,
    BaselineMode,
)
from .evaluation import (
    OpeExperimentConfig,
    evaluate_on_logged_dataset,
    run_ope_experiment,
)
from .fileio import (
    config_digest,
    load_config,
    ope_result_rows,
    read_dataset,
    read_policy,
    training_result_rows,
    write_dataset,
    write_results,
)
from .learning import OptimizerConfig, lambda_sweep, train_full_batch, train_mini_batch
from .rngs import STREAM_TEST_CONTEXTS, substream
from .simulator import (
    EnvironmentConfig,
    generate_environment,
    generate_logged_dataset,
    policy_value_on_contexts,
)

_CONFIG_ERRORS = (ConfigError, ContractViolationError, DatasetParseError, CommonSupportError)
_NUMERIC_ERRORS = (NumericError, DegenerateSupportError)


def _environment_config(config: dict, dataset_size: int | None = None) -> EnvironmentConfig:
    env = config["environment"]
    return EnvironmentConfig(
        num_actions=env["num_actions"],
        inverse_temperature=env["inverse_temperature"],
        dataset_size=dataset_size if dataset_size is not None else env["dataset_size"],
        seed=config["seed"],
        context_dim=env["context_dim"],
    )


def _optimizer_config(config: dict) -> OptimizerConfig:
    opt = config["optimizer"]
    return OptimizerConfig(
        base_learning_rate=opt["base_learning_rate"],
        epochs=opt["epochs"],
        batch_size=opt["batch_size"],
        decay_rate=opt["decay_rate"],
        beta1=opt["beta1"],
        beta2=opt["beta2"],
        epsilon=opt["epsilon"],
    )


def _value_oracle(config: dict, env):
    """Fresh-context evaluation callable, shared by all runs of one command."""
    rng = substream(config["seed"], STREAM_TEST_CONTEXTS)
    contexts = rng.standard_normal(
        (config["train"]["test_contexts"], config["environment"]["context_dim"])
    )
    return functools.partial(policy_value_on_contexts, env, contexts=contexts)


def _cmd_simulate(config: dict, out: str) -> int:
    env_config = _environment_config(config)
    env = generate_environment(env_config)
    write_dataset(generate_logged_dataset(env, env_config), out)
    return 0


def _train_one_run(config: dict, label: str, run_seed: int) -> list[dict]:
    """One (estimator, seed) training run; returns its tidy result rows.

    The logged dataset is redrawn per seed (independent runs over fresh
    logs), and the run seed also drives the mini-batch shuffle stream.
    """
    mode = BaselineMode.parse(label)
    env_config = _environment_config(config)
    env = generate_environment(env_config)
    dataset = generate_logged_dataset(env, env_config, replication=run_seed)
    oracle = _value_oracle(config, env)
    optimizer = _optimizer_config(config)
    full_batch = optimizer.batch_size == "full"
    if mode.kind == KIND_DOUBLY_ROBUST:
        raise ConfigError(f"estimator {label!r} is not a trainable objective")
    if mode.kind in (KIND_SELF_NORMALIZED, KIND_ESTIMATOR_OPTIMAL):
        if not full_batch:
            raise ConfigError(
                f"estimator {label!r} requires batch_size: full — its objective "
                "is a ratio over the whole dataset and does not decompose into "
                "mini-batch sums"
            )
        report = train_full_batch(dataset, mode, optimizer, oracle)
    elif mode.kind == KIND_ZERO and full_batch:
        report = train_full_batch(dataset, mode, optimizer, oracle)
    else:
        report = train_mini_batch(dataset, mode, optimizer, oracle, seed=run_seed)
    return training_result_rows(
        report,
        experiment=config["experiment"],
        estimator=label,
        seed=run_seed,
        k_actions=env_config.num_actions,
        inv_temperature=env_config.inverse_temperature,
        n_logged=env_config.dataset_size,
    )


def _train_worker(args) -> list[dict]:
    return _train_one_run(*args)


def _cmd_train(config: dict, out: str) -> int:
    runs = [
        (config, label, int(run_seed))
        for label in config["estimators"]
        for run_seed in config["train"]["seeds"]
    ]
    threads = int(config["threads"])
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            per_run = list(pool.map(_train_worker, runs))
    else:
        per_run = [_train_one_run(*run) for run in runs]
    write_results([row for rows in per_run for row in rows], out)
    return 0


def _cmd_ope(config: dict, out: str) -> int:
    ope = config["ope"]
    experiment_config = OpeExperimentConfig(
        action_space_sizes=tuple(ope["action_space_sizes"]),
        inverse_temperatures=tuple(ope["inverse_temperatures"]),
        dataset_sizes=tuple(ope["dataset_sizes"]),
        estimators=tuple(BaselineMode.parse(label) for label in config["estimators"]),
        seed=config["seed"],
        replications=ope["replications"],
        context_dim=config["environment"]["context_dim"],
        true_value_contexts=ope["true_value_contexts"],
        target_train_size=ope["target_train_size"],
        target_epochs=ope["target_epochs"],
        target_batch_size=ope["target_batch_size"],
        target_learning_rate=ope["target_learning_rate"],
    )
    rows = run_ope_experiment(experiment_config, max_workers=int(config["threads"]))
    write_results(
        ope_result_rows(rows, experiment=config["experiment"], seed=config["seed"]), out
    )
    return 0


def _cmd_sweep(config: dict, out: str) -> int:
    env_config = _environment_config(config)
    env = generate_environment(env_config)
    dataset = generate_logged_dataset(env, env_config)
    result = lambda_sweep(
        dataset,
        config["sweep"]["lambda_grid"],
        _optimizer_config(config),
        _value_oracle(config, env),
        seed=config["seed"],
        validation_fraction=config["sweep"]["validation_fraction"],
        max_workers=int(config["threads"]),
    )
    rows = []
    for lam in sorted(result.reports):
        label = BaselineMode.fixed(lam).label
        rows.extend(
            training_result_rows(
                result.reports[lam],
                experiment=config["experiment"],
                estimator=label,
                seed=config["seed"],
                k_actions=env_config.num_actions,
                inv_temperature=env_config.inverse_temperature,
                n_logged=env_config.dataset_size,
            )
        )
        rows.append(
            {
                "experiment": f"{config['experiment']}-validation",
                "estimator": label,
                "seed": config["seed"],
                "epoch": 0,
                "k_actions": env_config.num_actions,
                "inv_temperature": env_config.inverse_temperature,
                "n_logged": env_config.dataset_size,
                "metric_name": "test_value",
                "metric_value": result.validation_values[lam],
            }
        )
    write_results(rows, out)
    print(f"best lambda: {result.best_lambda:g}")
    return 0


def _cmd_evaluate(config: dict, out: str | None) -> int:
    settings = config["evaluate"]
    for key in ("dataset_path", "policy_path", "reference_value"):
        if settings[key] is None:
            raise ConfigError(f"evaluate requires config key 'evaluate.{key}'")
    policy = read_policy(settings["policy_path"])
    dataset = read_dataset(settings["dataset_path"], num_actions=policy.num_actions)
    modes = [BaselineMode.parse(label) for label in config["estimators"]]
    records = evaluate_on_logged_dataset(
        dataset, policy, modes, float(settings["reference_value"])
    )
    for record in records:
        print(
            f"{record.estimator}\tvalue={record.value!r}"
            f"\trel_abs_error={record.rel_abs_error!r}"
        )
    if out:
        rows = []
        for record in records:
            for metric, value in (
                ("test_value", record.value),
                ("rel_abs_error", record.rel_abs_error),
                ("beta_used", float("nan") if record.beta_used is None else record.beta_used),
            ):
                rows.append(
                    {
                        "experiment": config["experiment"],
                        "estimator": record.estimator,
                        "seed": config["seed"],
                        "epoch": 0,
                        "k_actions": policy.num_actions,
                        "inv_temperature": float("nan"),
                        "n_logged": len(dataset),
                        "metric_name": metric,
                        "metric_value": value,
                    }
                )
        write_results(rows, out)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="betabandit",
        description="Synthetic contextual-bandit benchmark: simulate logs, "
        "train policies off-policy, and compare value estimators.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    specs = {
        "simulate": ("generate a logged-interaction dataset CSV", True),
        "train": ("train policies per config and write per-epoch results", True),
        "ope": ("run the replicated estimator-accuracy grid", True),
        "sweep": ("tune the fixed reward translation over a grid", True),
        "evaluate": ("score estimators on an existing dataset + policy", False),
    }
    for name, (help_text, out_required) in specs.items():
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, help="YAML configuration file")
        sub.add_argument(
            "--out", required=out_required, help="output file path (CSV)"
        )
        sub.add_argument("--seed", type=int, help="override the config seed")
        sub.add_argument("--threads", type=int, help="override the config thread count")
    return parser


_COMMANDS = {
    "simulate": _cmd_simulate,
    "train": _cmd_train,
    "ope": _cmd_ope,
    "sweep": _cmd_sweep,
    "evaluate": _cmd_evaluate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config["seed"] = int(args.seed)
        if args.threads is not None:
            config["threads"] = int(args.threads)
        print(f"effective config sha256 {config_digest(config)}", file=sys.stderr)
        return _COMMANDS[args.command](config, args.out)
    except _CONFIG_ERRORS as exc:
        print(f"config error in '{args.command}': {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error in '{args.command}': {exc}", file=sys.stderr)
        return 2
    except _NUMERIC_ERRORS as exc:
        print(f"numeric error in '{args.command}': {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
