import subprocess
import sys

from betabandit import LinearSoftmaxPolicy
from betabandit.cli import main
from betabandit.fileio import read_dataset, read_results, write_dataset, write_policy

from conftest import random_instance


def run_cli(*argv):
    return main(list(argv))


def base_config(tmp_path, text=""):
    path = tmp_path / "config.yaml"
    path.write_text(
        "environment:\n"
        "  num_actions: 3\n"
        "  dataset_size: 120\n"
        "  context_dim: 3\n"
        "optimizer:\n"
        "  epochs: 2\n"
        "  batch_size: 64\n"
        "train:\n"
        "  test_contexts: 500\n"
        + text
    )
    return str(path)


def test_simulate_writes_parseable_dataset(tmp_path):
    config = base_config(tmp_path)
    out = tmp_path / "log.csv"
    assert run_cli("simulate", "--config", config, "--out", str(out)) == 0
    dataset = read_dataset(out)
    assert len(dataset) == 120
    assert dataset.context_dim == 3


def test_simulate_is_byte_identical_across_reruns(tmp_path):
    config = base_config(tmp_path)
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli("simulate", "--config", config, "--out", str(first)) == 0
    assert run_cli("simulate", "--config", config, "--out", str(second)) == 0
    assert first.read_bytes() == second.read_bytes()


def test_seed_override_changes_output(tmp_path):
    config = base_config(tmp_path)
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    run_cli("simulate", "--config", config, "--out", str(first))
    run_cli("simulate", "--config", config, "--out", str(second), "--seed", "5")
    assert first.read_bytes() != second.read_bytes()


def test_effective_config_digest_goes_to_stderr(tmp_path, capsys):
    config = base_config(tmp_path)
    out = tmp_path / "log.csv"
    run_cli("simulate", "--config", config, "--out", str(out))
    captured = capsys.readouterr()
    assert "sha256" in captured.err


def test_unknown_config_key_exits_2(tmp_path, capsys):
    path = tmp_path / "config.yaml"
    path.write_text("typo_key: 1\n")
    out = tmp_path / "log.csv"
    assert run_cli("simulate", "--config", str(path), "--out", str(out)) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path):
    out = tmp_path / "log.csv"
    code = run_cli("simulate", "--config", str(tmp_path / "nope.yaml"), "--out", str(out))
    assert code == 2


def test_train_writes_expected_rows(tmp_path):
    config = base_config(tmp_path, "estimators: [ips, banditnet:0.5]\ntrain:\n  seeds: [0, 1]\n  test_contexts: 300\n")
    out = tmp_path / "results.csv"
    assert run_cli("train", "--config", config, "--out", str(out)) == 0
    rows = read_results(out)
    # 2 estimators x 2 seeds x 2 epochs x 3 metrics
    assert len(rows) == 24
    assert {row["estimator"] for row in rows} == {"ips", "banditnet:0.5"}
    assert {row["metric_name"] for row in rows} == {
        "test_value",
        "grad_variance",
        "beta_used",
    }


def test_train_snips_with_mini_batches_exits_2(tmp_path, capsys):
    config = base_config(tmp_path, "estimators: [snips]\n")
    out = tmp_path / "results.csv"
    assert run_cli("train", "--config", config, "--out", str(out)) == 2
    assert "decompose" in capsys.readouterr().err


def test_train_snips_full_batch_succeeds(tmp_path):
    config = base_config(
        tmp_path,
        "estimators: [snips]\noptimizer:\n  epochs: 2\n  batch_size: full\n",
    )
    out = tmp_path / "results.csv"
    assert run_cli("train", "--config", config, "--out", str(out)) == 0
    rows = read_results(out)
    assert all(row["estimator"] == "snips" for row in rows)


def test_train_is_byte_identical_and_thread_invariant(tmp_path):
    config = base_config(
        tmp_path, "estimators: [ips, beta-ips-grad]\ntrain:\n  seeds: [0, 1]\n  test_contexts: 200\n"
    )
    serial, threaded = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli("train", "--config", config, "--out", str(serial)) == 0
    assert (
        run_cli("train", "--config", config, "--out", str(threaded), "--threads", "2")
        == 0
    )
    assert serial.read_bytes() == threaded.read_bytes()


def test_ope_emits_one_row_per_estimator_cell_metric(tmp_path):
    config = base_config(
        tmp_path,
        "estimators: [ips, beta-ips]\n"
        "ope:\n"
        "  action_space_sizes: [3]\n"
        "  inverse_temperatures: [1.0]\n"
        "  dataset_sizes: [40, 80]\n"
        "  replications: 5\n"
        "  true_value_contexts: 10000\n"
        "  target_train_size: 200\n"
        "  target_epochs: 2\n"
        "  target_batch_size: 64\n",
    )
    out = tmp_path / "results.csv"
    assert run_cli("ope", "--config", config, "--out", str(out)) == 0
    rows = read_results(out)
    # 2 estimators x 2 cells x 4 metrics
    assert len(rows) == 16
    assert {row["metric_name"] for row in rows} == {
        "mse",
        "bias_sq",
        "est_variance",
        "rel_abs_error",
    }


def test_sweep_reports_per_lambda_and_validation(tmp_path, capsys):
    config = base_config(
        tmp_path,
        "environment:\n  num_actions: 3\n  dataset_size: 200\n  context_dim: 3\n"
        "sweep:\n  lambda_grid: [0.0, 0.5]\n",
    )
    out = tmp_path / "results.csv"
    assert run_cli("sweep", "--config", config, "--out", str(out)) == 0
    assert "best lambda" in capsys.readouterr().out
    rows = read_results(out)
    validation = [row for row in rows if row["experiment"].endswith("-validation")]
    assert {row["estimator"] for row in validation} == {"banditnet:0", "banditnet:0.5"}


def test_evaluate_prints_and_writes_estimates(tmp_path, capsys):
    dataset, policy = random_instance(3, num_actions=3, context_dim=2, size=40)
    dataset_path = tmp_path / "log.csv"
    policy_path = tmp_path / "policy.csv"
    write_dataset(dataset, dataset_path)
    write_policy(policy, policy_path)
    config = tmp_path / "config.yaml"
    config.write_text(
        "estimators: [ips, snips, beta-ips]\n"
        "evaluate:\n"
        f"  dataset_path: {dataset_path}\n"
        f"  policy_path: {policy_path}\n"
        "  reference_value: 0.5\n"
    )
    out = tmp_path / "results.csv"
    assert run_cli("evaluate", "--config", str(config), "--out", str(out)) == 0
    printed = capsys.readouterr().out
    assert "ips" in printed and "rel_abs_error" in printed
    rows = read_results(out)
    assert len(rows) == 9  # 3 estimators x 3 metrics


def test_evaluate_requires_paths(tmp_path, capsys):
    config = tmp_path / "config.yaml"
    config.write_text("estimators: [ips]\n")
    assert run_cli("evaluate", "--config", str(config)) == 2
    assert "evaluate.dataset_path" in capsys.readouterr().err


def test_evaluate_surfaces_parse_errors_with_rows(tmp_path, capsys):
    dataset_path = tmp_path / "log.csv"
    dataset_path.write_text("x_0,x_1,action,reward,propensity\n0.1,0.2,0,1.0,0.0\n")
    policy_path = tmp_path / "policy.csv"
    write_policy(LinearSoftmaxPolicy.uniform(3, 2), policy_path)
    config = tmp_path / "config.yaml"
    config.write_text(
        "evaluate:\n"
        f"  dataset_path: {dataset_path}\n"
        f"  policy_path: {policy_path}\n"
        "  reference_value: 0.5\n"
    )
    assert run_cli("evaluate", "--config", str(config)) == 2
    assert "row 1" in capsys.readouterr().err


def test_console_entry_point_runs(tmp_path):
    config = base_config(tmp_path)
    out = tmp_path / "log.csv"
    result = subprocess.run(
        [sys.executable, "-m", "betabandit.cli", "simulate", "--config", config,
         "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert "sha256" in result.stderr
    assert out.exists()
