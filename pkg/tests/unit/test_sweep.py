"""Unit tests for granularity sweeps."""

import pytest

from src.runconfig import RunConfig
from src.services.evaluator import PolicySpec, evaluate
from src.services.sweep import sweep_granularity, train_backbones, write_sweep
from src.utils.exceptions import ArgumentError
from src.utils.formatters import SWEEP_HEADER, read_csv


def test_rows_follow_spec_then_k_order(tiny_scenario_cfg):
    specs = [PolicySpec(kind="no_rebalance"), PolicySpec(kind="uniform_distribution")]
    rows = sweep_granularity(specs, tiny_scenario_cfg, [3, 2], [0], episodes=1)

    assert [(r.backbone, r.k) for r in rows] == [
        ("no_rebalance", 3),
        ("no_rebalance", 2),
        ("uniform_distribution", 3),
        ("uniform_distribution", 2),
    ]
    assert all(r.cost == 0.0 for r in rows if r.backbone == "no_rebalance")


def test_model_is_evaluated_zero_shot_on_rescaled_grids(tiny_scenario_cfg, small_model_cfg):
    """Test one set of weights runs on every grid size and matches a direct evaluation."""
    spec = PolicySpec(kind="model", model=small_model_cfg, init_seed=5)
    rows = sweep_granularity([spec], tiny_scenario_cfg, [2, 3], [0], episodes=1)

    assert [r.backbone for r in rows] == ["gcn", "gcn"]
    for row in rows:
        direct = evaluate(spec, tiny_scenario_cfg.rescaled(row.k), 1, [0])
        assert row.reward == pytest.approx(direct[0].reward_mean)
        assert row.served == pytest.approx(direct[0].served_mean)


@pytest.mark.parametrize("k_list", [[], [0], [2, -1]])
def test_bad_k_list_rejected(tiny_scenario_cfg, k_list):
    with pytest.raises(ArgumentError):
        sweep_granularity([PolicySpec(kind="no_rebalance")], tiny_scenario_cfg, k_list, [0], episodes=1)


def test_write_sweep_outputs(tiny_scenario_cfg, tmp_path):
    rows = sweep_granularity([PolicySpec(kind="no_rebalance")], tiny_scenario_cfg, [2], [0], episodes=1)
    csv_path, svg_path = write_sweep(rows, tmp_path)

    written = read_csv(csv_path)
    assert list(written[0].keys()) == SWEEP_HEADER
    assert written[0]["k"] == "2"
    assert "<svg" in svg_path.read_text(encoding="utf-8")


def test_train_backbones_writes_one_checkpoint_each(tiny_scenario_cfg, small_model_cfg, quick_train_cfg, tmp_path):
    run_cfg = RunConfig(scenario=tiny_scenario_cfg, model=small_model_cfg, train=quick_train_cfg, seeds=[4])
    checkpoints = train_backbones(run_cfg, ["gcn", "gat"], tmp_path)

    assert [b for b, _ in checkpoints] == ["gcn", "gat"]
    for backbone, path in checkpoints:
        assert path.exists()
        assert path.parent == tmp_path / f"{backbone}-seed4"
