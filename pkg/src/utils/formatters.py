"""Formatting utilities for result files and console reports."""

from __future__ import annotations

import csv
from collections.abc import Iterable, Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

RESULTS_HEADER = [
    "model",
    "backbone",
    "k",
    "seed",
    "episodes",
    "reward_mean",
    "reward_se",
    "served_mean",
    "cost_mean",
    "dev_pct",
]
TRAIN_LOG_HEADER = [
    "episode",
    "reward",
    "served",
    "rebal_cost",
    "policy_loss",
    "value_loss",
    "entropy",
]
SWEEP_HEADER = ["k", "backbone", "reward", "served", "cost"]


def format_float(value: float | None, digits: int = 6) -> str:
    """Fixed-point text; blank for missing values."""
    if value is None:
        return ""
    return f"{value:.{digits}f}"


def trajectory_header(n: int) -> list[str]:
    return ["t", *[f"v{i}" for i in range(n)], "served", "revenue", "rebal_cost", "reward"]


def results_row(summary) -> list[str]:
    """One results-CSV row from an EvaluationSummary."""
    return [
        summary.model,
        summary.backbone,
        str(summary.k),
        str(summary.seed),
        str(summary.episodes),
        format_float(summary.reward_mean),
        format_float(summary.reward_se),
        format_float(summary.served_mean),
        format_float(summary.cost_mean),
        format_float(summary.dev_pct),
    ]


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with Path(path).open(newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def render_sweep_svg(rows: Sequence[Sequence[str]], path: str | Path, title: str = "") -> Path:
    """
    Line chart of reward against grid size, one line per backbone.

    Args:
        rows: Sweep CSV rows (k, backbone, reward, served, cost)
        path: Output .svg path
        title: Chart title

    Returns:
        Path of the written SVG
    """
    series: dict[str, list[tuple[int, float]]] = {}
    for k, backbone, reward, *_ in rows:
        series.setdefault(backbone, []).append((int(k), float(reward)))

    # fixed hash salt and no date keep the SVG byte-stable across runs
    with plt.rc_context({"svg.hashsalt": "amod", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for backbone in sorted(series):
            points = sorted(series[backbone])
            ax.plot(
                [k for k, _ in points],
                [r for _, r in points],
                marker="o",
                label=backbone,
                gid=f"series-{backbone}",
            )
        ax.set_xlabel("grid size k")
        ax.set_ylabel("mean episode reward")
        if title:
            ax.set_title(title)
        ax.legend()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def format_history(runs: Sequence) -> str:
    """Plain-text table of recent runs."""
    if not runs:
        return "No runs recorded yet."
    lines = [f"{'id':>4}  {'command':<9} {'backbone':<8} {'seed':>6}  {'status':<9} output"]
    for run in runs:
        lines.append(
            f"{run.id:>4}  {run.command:<9} {run.backbone or '-':<8} {run.seed:>6}  "
            f"{run.status.value:<9} {run.output_dir}"
        )
    return "\n".join(lines)


def format_gradcheck_report(results: Sequence) -> str:
    lines = []
    for result in results:
        verdict = "ok" if result.passed else "FAIL"
        lines.append(f"{result.name:<32} max_rel_error={result.max_rel_error:.3e}  {verdict}")
    return "\n".join(lines)
