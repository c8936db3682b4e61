"""End-to-end tests of the amod command line."""

import json

import pytest

from src.autograd import ops
from src.cli import main
from src.config import settings
from src.runconfig import RESOLVED_CONFIG_NAME
from src.utils.formatters import RESULTS_HEADER, SWEEP_HEADER, read_csv


@pytest.fixture(autouse=True)
def registry_db(tmp_path, monkeypatch):
    """Point the run registry at a throwaway SQLite file."""
    monkeypatch.setattr(settings, "DATABASE_URL", f"sqlite:///{tmp_path / 'runs.db'}")


@pytest.fixture
def run_config(tmp_path):
    """Tiny 2x2 scenario, small networks, two training episodes."""
    path = tmp_path / "run.json"
    path.write_text(
        json.dumps(
            {
                "scenario": {
                    "graph": {"k": 2},
                    "fleet_size": 8,
                    "horizon": 4,
                    "demand": {"pattern": "commuter_pulse", "base_rate": 0.5},
                },
                "model": {"hidden_dim": 8, "dense_dim": 8},
                "train": {"episodes": 2},
                "seeds": [0],
            },
            indent=2,
        )
    )
    return path


@pytest.fixture
def oracle_scenario(tmp_path):
    path = tmp_path / "path3.json"
    path.write_text(
        json.dumps(
            {
                "graph": {"k": None, "n": 3, "edges": [[0, 1], [1, 2]]},
                "fleet_size": 4,
                "horizon": 3,
                "price_per_trip": 5.0,
                "demand": {"pattern": "uniform", "base_rate": 0.6},
            }
        )
    )
    return path


def test_train_is_reproducible(run_config, tmp_path, capsys):
    """Test two identical train invocations write byte-identical logs."""
    assert main(["train", "--config", str(run_config), "--out", str(tmp_path / "a")]) == 0
    assert main(["train", "--config", str(run_config), "--out", str(tmp_path / "b")]) == 0

    first = (tmp_path / "a" / "train_log.csv").read_bytes()
    assert first == (tmp_path / "b" / "train_log.csv").read_bytes()
    assert (tmp_path / "a" / "checkpoint.ckpt").is_file()
    assert "checkpoint:" in capsys.readouterr().out


def test_train_backbone_flag_is_echoed(run_config, tmp_path):
    out = tmp_path / "ptd"
    assert main(["train", "--config", str(run_config), "--backbone", "ptdnet", "--episodes", "1", "--out", str(out)]) == 0

    resolved = json.loads((out / RESOLVED_CONFIG_NAME).read_text())
    assert resolved["model"]["backbone"] == "ptdnet"
    assert resolved["train"]["episodes"] == 1


def test_train_dotted_override(run_config, tmp_path):
    out = tmp_path / "lr"
    assert main(["train", "--config", str(run_config), "--out", str(out), "--train.lr", "0.01"]) == 0
    assert json.loads((out / RESOLVED_CONFIG_NAME).read_text())["train"]["lr"] == 0.01


def test_train_multiple_seeds_use_subdirectories(run_config, tmp_path):
    out = tmp_path / "seeds"
    assert main(["train", "--config", str(run_config), "--seed", "1", "--seed", "2", "--out", str(out)]) == 0
    assert (out / "seed1" / "checkpoint.ckpt").is_file()
    assert (out / "seed2" / "checkpoint.ckpt").is_file()


def test_eval_baseline_writes_results(run_config, tmp_path):
    out = tmp_path / "eval"
    assert main(["eval", "--config", str(run_config), "--baseline", "no_rebalance", "--episodes", "2", "--out", str(out)]) == 0

    (row,) = read_csv(out / "results.csv")
    assert list(row) == RESULTS_HEADER
    assert row["model"] == "no_rebalance"
    assert row["k"] == "2"
    assert row["episodes"] == "2"
    assert row["cost_mean"] == "0.000000"
    assert row["dev_pct"] == ""


def test_eval_checkpoint_with_extras(run_config, tmp_path):
    """Test a trained checkpoint evaluates and dumps its chart and trajectory."""
    train_out = tmp_path / "train"
    assert main(["train", "--config", str(run_config), "--out", str(train_out)]) == 0

    out = tmp_path / "eval"
    code = main(
        [
            "eval",
            "--config", str(run_config),
            "--checkpoint", str(train_out / "checkpoint.ckpt"),
            "--svg",
            "--trajectory",
            "--out", str(out),
        ]
    )

    assert code == 0
    (row,) = read_csv(out / "results.csv")
    assert row["model"] == "a2c"
    assert row["backbone"] == "gcn"
    assert (out / "results.svg").is_file()
    assert len(read_csv(out / "trajectory.csv")) == 4


@pytest.fixture
def trained_checkpoint(run_config, tmp_path):
    train_out = tmp_path / "train"
    assert main(["train", "--config", str(run_config), "--out", str(train_out)]) == 0
    return train_out / "checkpoint.ckpt"


def test_eval_rejects_backbone_other_than_checkpoint(run_config, trained_checkpoint, tmp_path, capsys):
    code = main(
        [
            "eval",
            "--config", str(run_config),
            "--checkpoint", str(trained_checkpoint),
            "--backbone", "gat",
            "--out", str(tmp_path / "eval"),
        ]
    )
    assert code == 2
    assert "gcn" in capsys.readouterr().err


def test_eval_accepts_matching_backbone(run_config, trained_checkpoint, tmp_path):
    out = tmp_path / "eval"
    code = main(
        [
            "eval",
            "--config", str(run_config),
            "--checkpoint", str(trained_checkpoint),
            "--backbone", "gcn",
            "--episodes", "2",
            "--out", str(out),
        ]
    )
    assert code == 0
    (row,) = read_csv(out / "results.csv")
    assert row["backbone"] == "gcn"


def test_eval_defaults_to_twenty_episodes(run_config, tmp_path):
    out = tmp_path / "eval"
    assert main(["eval", "--config", str(run_config), "--baseline", "random_dirichlet", "--out", str(out)]) == 0

    (row,) = read_csv(out / "results.csv")
    assert row["episodes"] == "20"
    assert float(row["reward_se"]) > 0.0
    resolved = json.loads((out / RESOLVED_CONFIG_NAME).read_text())
    assert resolved["evaluation"]["episodes"] == 20


def test_stochastic_eval_differs_from_mean_action(run_config, trained_checkpoint, tmp_path):
    """Test sampled actions give other results than the Dirichlet mean."""
    rows = {}
    for mode, flags in (("mean", []), ("sampled", ["--stochastic"])):
        out = tmp_path / mode
        args = ["eval", "--config", str(run_config), "--checkpoint", str(trained_checkpoint), "--out", str(out)]
        assert main(args + flags) == 0
        (rows[mode],) = read_csv(out / "results.csv")

    assert rows["mean"]["episodes"] == rows["sampled"]["episodes"] == "20"
    assert rows["mean"] != rows["sampled"]


def test_eval_with_oracle(run_config, oracle_scenario, tmp_path):
    out = tmp_path / "oracle"
    code = main(
        [
            "eval",
            "--config", str(run_config),
            "--baseline", "uniform_distribution",
            "--scenario", str(oracle_scenario),
            "--oracle",
            "--episodes", "2",
            "--out", str(out),
        ]
    )
    assert code == 0
    (row,) = read_csv(out / "results.csv")
    assert row["dev_pct"] != ""
    assert float(row["dev_pct"]) <= 0.0


def test_eval_oracle_on_large_scenario_fails(run_config, tmp_path):
    code = main(["eval", "--config", str(run_config), "--baseline", "no_rebalance", "--oracle", "--out", str(tmp_path)])
    assert code == 2


def test_eval_needs_one_policy(run_config, tmp_path, capsys):
    assert main(["eval", "--config", str(run_config), "--out", str(tmp_path)]) == 2
    assert "exactly one" in capsys.readouterr().err


def test_sweep_rejects_bad_grid_size(run_config, tmp_path):
    assert main(["sweep", "--config", str(run_config), "--k", "0", "--baselines", "no_rebalance", "--out", str(tmp_path)]) == 2


def test_sweep_writes_csv_and_chart(run_config, tmp_path):
    """Test a baseline sweep over two grid sizes."""
    out = tmp_path / "sweep"
    code = main(
        [
            "sweep",
            "--config", str(run_config),
            "--k", "2", "3",
            "--baselines", "no_rebalance", "uniform_distribution",
            "--out", str(out),
        ]
    )

    assert code == 0
    rows = read_csv(out / "sweep.csv")
    assert list(rows[0]) == SWEEP_HEADER
    assert [(r["backbone"], r["k"]) for r in rows] == [
        ("no_rebalance", "2"),
        ("no_rebalance", "3"),
        ("uniform_distribution", "2"),
        ("uniform_distribution", "3"),
    ]
    svg = (out / "sweep.svg").read_text()
    assert 'id="series-no_rebalance"' in svg


def test_invalid_config_exits_with_config_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "model": {\n    "depth": 3\n  }\n}\n')

    assert main(["train", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert f"{path}:3" in capsys.readouterr().err


def test_unknown_flag_is_an_argument_error(run_config, tmp_path):
    assert main(["train", "--config", str(run_config), "--verbose", "--out", str(tmp_path)]) == 2


def test_bad_choice_exits_through_argparse():
    with pytest.raises(SystemExit) as exc_info:
        main(["train", "--backbone", "transformer"])
    assert exc_info.value.code == 2


def test_gradcheck_ops(capsys):
    assert main(["gradcheck", "ops"]) == 0
    assert "components passed" in capsys.readouterr().out


def test_gradcheck_reports_failures(mocker, capsys):
    mocker.patch.object(ops.Tanh, "backward", staticmethod(lambda ctx, grad: (grad,)))

    assert main(["gradcheck", "ops"]) == 1
    assert "FAILED: tanh" in capsys.readouterr().out


def test_history_lists_runs(run_config, tmp_path, capsys):
    assert main(["eval", "--config", str(run_config), "--baseline", "no_rebalance", "--out", str(tmp_path / "e")]) == 0
    capsys.readouterr()

    assert main(["history"]) == 0
    out = capsys.readouterr().out
    assert "eval" in out
    assert "completed" in out
