"""Zero-shot granularity sweeps and multi-backbone comparisons."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.env.scenario import ScenarioConfig
from src.runconfig import RunConfig
from src.services.evaluator import PolicySpec, evaluate
from src.services.trainer import Trainer
from src.utils.formatters import SWEEP_HEADER, format_float, render_sweep_svg, write_csv
from src.utils.logger import setup_logging
from src.utils.validators import validate_k_list

logger = setup_logging(__name__)

SWEEP_CSV_NAME = "sweep.csv"
SWEEP_SVG_NAME = "sweep.svg"


@dataclass
class SweepRow:
    k: int
    backbone: str
    reward: float
    served: float
    cost: float

    def row(self) -> list[str]:
        return [
            str(self.k),
            self.backbone,
            format_float(self.reward),
            format_float(self.served),
            format_float(self.cost),
        ]


def sweep_granularity(
    specs: Sequence[PolicySpec],
    scenario_cfg: ScenarioConfig,
    k_list: Sequence[int],
    seeds: Sequence[int],
    episodes: int,
    workers: int = 1,
) -> list[SweepRow]:
    """
    Evaluate the same weights zero-shot on every grid size in k_list.

    The scenario family is rescaled to each k (see ScenarioConfig.rescaled); the
    networks need no reshaping because every parameter is independent of n.

    Args:
        specs: Trained models and/or baselines
        scenario_cfg: Scenario family on the training grid
        k_list: Grid sizes to evaluate
        seeds: Evaluation root seeds; rows average over them
        episodes: Episodes per seed
        workers: Evaluation worker processes

    Returns:
        One row per (spec, k), in input order
    """
    k_list = validate_k_list(k_list)
    rows = []
    for spec in specs:
        label = spec.backbone if spec.kind == "model" else spec.kind
        for k in k_list:
            summaries = evaluate(spec, scenario_cfg.rescaled(k), episodes, seeds, workers=workers)
            rows.append(
                SweepRow(
                    k=k,
                    backbone=label,
                    reward=float(np.mean([s.reward_mean for s in summaries])),
                    served=float(np.mean([s.served_mean for s in summaries])),
                    cost=float(np.mean([s.cost_mean for s in summaries])),
                )
            )
            logger.info(f"Sweep {label} k={k}: reward={rows[-1].reward:.3f}")
    return rows


def write_sweep(rows: Sequence[SweepRow], out_dir: str | Path) -> tuple[Path, Path]:
    """Write the sweep CSV and its reward-vs-k SVG chart."""
    out_dir = Path(out_dir)
    text_rows = [r.row() for r in rows]
    csv_path = write_csv(out_dir / SWEEP_CSV_NAME, SWEEP_HEADER, text_rows)
    svg_path = render_sweep_svg(text_rows, out_dir / SWEEP_SVG_NAME, title="zero-shot reward by grid size")
    return csv_path, svg_path


def train_backbones(
    run_cfg: RunConfig, backbones: Sequence[str], out_dir: str | Path
) -> list[tuple[str, Path]]:
    """
    Train every backbone from the same config and first seed.

    Returns:
        (backbone, checkpoint path) pairs
    """
    seed = run_cfg.seeds[0]
    checkpoints = []
    for backbone in backbones:
        model_cfg = run_cfg.model.model_copy(update={"backbone": backbone})
        trainer = Trainer(
            run_cfg.scenario,
            model_cfg,
            run_cfg.train,
            seed,
            Path(out_dir) / f"{backbone}-seed{seed}",
        )
        logger.info(f"Training {backbone} for {run_cfg.train.episodes} episodes")
        checkpoints.append((backbone, trainer.train().checkpoint))
    return checkpoints
