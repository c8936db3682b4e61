"""Policies, episode rollouts and evaluation metrics."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Protocol

import numpy as np

from src.env.rng import derive_seed, stream
from src.env.scenario import Scenario, ScenarioConfig
from src.env.simulator import AmodState, current_distribution, node_features, reset, step
from src.policy.a2c import StepRecord, Trajectory
from src.policy.config import ModelConfig
from src.policy.dirichlet import dirichlet_log_pdf, mean_action, sample_action, sample_dirichlet
from src.policy.networks import PolicyNets
from src.services.oracle import check_oracle_bounds, oracle_search
from src.utils.exceptions import ArgumentError
from src.utils.formatters import format_float, trajectory_header, write_csv
from src.utils.logger import setup_logging

logger = setup_logging(__name__)

BaselineKind = Literal["no_rebalance", "uniform_distribution", "random_dirichlet"]
BASELINES: tuple[str, ...] = ("no_rebalance", "uniform_distribution", "random_dirichlet")


@dataclass
class Decision:
    action: np.ndarray
    log_density: float = 0.0
    value: float = 0.0
    noise: np.ndarray | None = None


class Policy(Protocol):
    name: str

    def act(self, state: AmodState, scenario: Scenario) -> Decision: ...


class BaselinePolicy:
    """Reference policies that need no training."""

    def __init__(self, kind: str):
        if kind not in BASELINES:
            raise ArgumentError(f"unknown baseline {kind!r}; choose from {', '.join(BASELINES)}")
        self.kind = kind
        self.name = kind

    def act(self, state: AmodState, scenario: Scenario) -> Decision:
        if self.kind == "no_rebalance":
            return Decision(action=current_distribution(state, scenario))
        if self.kind == "uniform_distribution":
            return Decision(action=np.full(scenario.n, 1.0 / scenario.n))
        rng = stream(state.seed, "action", state.t)
        return Decision(action=sample_dirichlet(np.ones(scenario.n), rng))


class NetworkPolicy:
    """Actor network acting through its Dirichlet head (mean or sample)."""

    def __init__(self, nets: PolicyNets, stochastic: bool = False, name: str = "a2c"):
        self.nets = nets
        self.stochastic = stochastic
        self.name = name

    def act(self, state: AmodState, scenario: Scenario) -> Decision:
        graph = scenario.graph
        x = node_features(state, scenario)
        noise = None
        if self.stochastic:
            noise = self.nets.draw_noise(graph, stream(state.seed, "gumbel", state.t))
        fwd = self.nets.forward(graph, x, noise)
        c = fwd.c.data.reshape(-1)
        if self.stochastic:
            action, log_pdf = sample_action(c, stream(state.seed, "action", state.t))
        else:
            action = mean_action(c)
            log_pdf = dirichlet_log_pdf(c, action)
        return Decision(action=action, log_density=log_pdf, value=fwd.value.item(), noise=noise)


@dataclass
class EpisodeMetrics:
    total_reward: float
    demand_served: int
    rebal_cost: float
    dev_vs_oracle: float | None = None
    oracle_reward: float | None = None


def run_episode(
    scenario: Scenario, policy: Policy, seed: int
) -> tuple[EpisodeMetrics, Trajectory]:
    """
    Roll out one full episode.

    Returns:
        Aggregated metrics and the per-step trajectory
    """
    state = reset(scenario, seed)
    traj = Trajectory()
    while state.t < scenario.horizon:
        features = node_features(state, scenario)
        vehicles = state.vehicles
        decision = policy.act(state, scenario)
        state, outcome = step(state, scenario, decision.action)
        traj.append(
            StepRecord(
                features=features,
                action=decision.action,
                log_density=decision.log_density,
                reward=outcome.reward,
                value=decision.value,
                noise=decision.noise,
                served=outcome.served,
                rebal_cost=outcome.rebal_cost,
                revenue=outcome.revenue,
                vehicles=vehicles,
            )
        )

    metrics = EpisodeMetrics(
        total_reward=float(sum(s.reward for s in traj.steps)),
        demand_served=int(sum(s.served for s in traj.steps)),
        rebal_cost=float(sum(s.rebal_cost for s in traj.steps)),
    )
    return metrics, traj


@dataclass(frozen=True)
class PolicySpec:
    """Picklable description of a policy, rebuilt inside worker processes."""

    kind: str
    model: ModelConfig | None = None
    arrays: Mapping[str, np.ndarray] | None = None
    init_seed: int = 0
    stochastic: bool = False

    @property
    def label(self) -> str:
        return "a2c" if self.kind == "model" else self.kind

    @property
    def backbone(self) -> str:
        return self.model.backbone if self.model is not None else "-"

    def build(self, scenario: Scenario) -> Policy:
        if self.kind != "model":
            return BaselinePolicy(self.kind)
        nets = PolicyNets(self.model, scenario.graph, self.init_seed)
        if self.arrays is not None:
            nets.load_state_arrays(self.arrays)
        return NetworkPolicy(nets, stochastic=self.stochastic)


@dataclass
class EvaluationSummary:
    """One results-CSV row."""

    model: str
    backbone: str
    k: int
    seed: int
    episodes: int
    reward_mean: float
    reward_se: float
    served_mean: float
    cost_mean: float
    dev_pct: float | None = None
    episode_metrics: list[EpisodeMetrics] = field(default_factory=list, repr=False)


def evaluation_seeds(seed: int, n_episodes: int) -> list[int]:
    return [derive_seed(seed, "eval", i) for i in range(n_episodes)]


def _evaluate_one(args: tuple[ScenarioConfig, PolicySpec, int, bool]) -> EpisodeMetrics:
    scenario_cfg, spec, episode_seed, with_oracle = args
    scenario = scenario_cfg.build()
    metrics, _ = run_episode(scenario, spec.build(scenario), episode_seed)
    if with_oracle:
        metrics.oracle_reward = oracle_search(scenario, episode_seed).reward
        metrics.dev_vs_oracle = deviation_pct(metrics.total_reward, metrics.oracle_reward)
    return metrics


def deviation_pct(reward: float, oracle_reward: float) -> float | None:
    """100 * (reward - oracle) / oracle; undefined for a zero oracle reward."""
    if oracle_reward == 0:
        return None
    return 100.0 * (reward - oracle_reward) / oracle_reward


def _standard_error(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def evaluate(
    spec: PolicySpec,
    scenario_cfg: ScenarioConfig,
    n_episodes: int,
    seeds: Sequence[int],
    oracle: bool = False,
    workers: int = 1,
) -> list[EvaluationSummary]:
    """
    Evaluate a policy over n_episodes per seed.

    Episodes may run in a process pool; results are merged in submission order,
    so the output does not depend on scheduling.

    Args:
        spec: Policy to evaluate
        scenario_cfg: Scenario to run on
        n_episodes: Episodes per seed
        seeds: Root seeds, one summary row each
        oracle: Also compute the deviation from the exhaustive-search optimum
        workers: Worker processes; 1 runs inline

    Returns:
        One EvaluationSummary per seed
    """
    if n_episodes < 1:
        raise ArgumentError(f"n_episodes must be at least 1, got {n_episodes}")
    scenario = scenario_cfg.build()
    if oracle:
        check_oracle_bounds(scenario)

    tasks = [
        (scenario_cfg, spec, episode_seed, oracle)
        for seed in seeds
        for episode_seed in evaluation_seeds(seed, n_episodes)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_one, tasks))
    else:
        results = [_evaluate_one(task) for task in tasks]

    summaries = []
    for index, seed in enumerate(seeds):
        chunk = results[index * n_episodes : (index + 1) * n_episodes]
        rewards = [m.total_reward for m in chunk]
        dev = None
        if oracle:
            dev = deviation_pct(float(np.mean(rewards)), float(np.mean([m.oracle_reward for m in chunk])))
        summaries.append(
            EvaluationSummary(
                model=spec.label,
                backbone=spec.backbone,
                k=scenario.graph.k,
                seed=int(seed),
                episodes=n_episodes,
                reward_mean=float(np.mean(rewards)),
                reward_se=_standard_error(rewards),
                served_mean=float(np.mean([m.demand_served for m in chunk])),
                cost_mean=float(np.mean([m.rebal_cost for m in chunk])),
                dev_pct=dev,
                episode_metrics=chunk,
            )
        )
        logger.info(
            f"Evaluated {spec.label}/{spec.backbone} seed={seed}: "
            f"reward={summaries[-1].reward_mean:.3f} ± {summaries[-1].reward_se:.3f}"
        )
    return summaries


def trajectory_rows(traj: Trajectory) -> list[list[str]]:
    """Per-step dump rows: t, vehicles per node before the step, served, revenue, cost, reward."""
    return [
        [
            str(t),
            *[str(int(v)) for v in record.vehicles],
            str(record.served),
            format_float(record.revenue),
            format_float(record.rebal_cost),
            format_float(record.reward),
        ]
        for t, record in enumerate(traj.steps)
    ]


def dump_trajectory(
    spec: PolicySpec, scenario_cfg: ScenarioConfig, seed: int, path: str | Path
) -> Path:
    """Replay the first evaluation episode of seed and write its trajectory CSV."""
    scenario = scenario_cfg.build()
    _, traj = run_episode(scenario, spec.build(scenario), evaluation_seeds(seed, 1)[0])
    return write_csv(path, trajectory_header(scenario.n), trajectory_rows(traj))
