"""A2C training loop with checkpointing, resume and Pro-GNN alternation."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from src.autograd.checkpoint import load_checkpoint, save_checkpoint
from src.autograd.optim import Adam
from src.config import settings
from src.env.rng import derive_seed
from src.env.scenario import ScenarioConfig
from src.gnn.prognn import RefinedStructure
from src.gnn.ptdnet import anneal_temperature
from src.graph.grid import Graph
from src.policy.a2c import Trajectory, UpdateResult, a2c_update, structure_gradient
from src.policy.config import ModelConfig, ProGnnConfig, TrainConfig
from src.policy.networks import PolicyNets
from src.services.evaluator import NetworkPolicy, run_episode
from src.utils.exceptions import NumericError
from src.utils.formatters import TRAIN_LOG_HEADER, format_float, read_csv, write_csv
from src.utils.logger import setup_logging

logger = setup_logging(__name__)

CHECKPOINT_NAME = "checkpoint.ckpt"
TRAIN_LOG_NAME = "train_log.csv"
NAN_DUMP_NAME = "nan_dump.ckpt"


@dataclass
class EpisodeLog:
    episode: int
    reward: float
    served: int
    rebal_cost: float
    policy_loss: float
    value_loss: float
    entropy: float

    def row(self) -> list[str]:
        return [
            str(self.episode),
            format_float(self.reward),
            str(self.served),
            format_float(self.rebal_cost),
            format_float(self.policy_loss),
            format_float(self.value_loss),
            format_float(self.entropy),
        ]

    @classmethod
    def from_row(cls, row: dict[str, str]) -> EpisodeLog:
        return cls(
            episode=int(row["episode"]),
            reward=float(row["reward"]),
            served=int(row["served"]),
            rebal_cost=float(row["rebal_cost"]),
            policy_loss=float(row["policy_loss"]),
            value_loss=float(row["value_loss"]),
            entropy=float(row["entropy"]),
        )


@dataclass
class TrainResult:
    checkpoint: Path
    log_path: Path
    episodes: int
    history: list[EpisodeLog] = field(default_factory=list)


def prognn_train_alternation(
    traj: Trajectory,
    nets: PolicyNets,
    optimizer: Adam,
    cfg: TrainConfig,
    schedule: ProGnnConfig,
    graph: Graph,
    episode: int,
) -> UpdateResult:
    """
    Weight step on the episode, then tau_s refine steps of S every tau_w episodes.

    With joint training each refine step receives the A2C loss gradient with respect
    to S, chained through the normalised propagation. tau_s = 0 leaves S = A, which
    reproduces plain GCN training.
    """
    result = a2c_update(traj, nets, optimizer, cfg, graph)
    structure = nets.structure
    if not isinstance(structure, RefinedStructure) or (episode + 1) % schedule.tau_w != 0:
        return result

    for _ in range(schedule.tau_s):
        task_gradient = None
        if schedule.joint:
            task_gradient = structure_gradient(traj, nets, cfg, graph)[structure.S.name]
        structure.refine(task_gradient)
    return result


class Trainer:
    """Trains one (scenario, model, seed) combination into an output directory."""

    def __init__(
        self,
        scenario_cfg: ScenarioConfig,
        model_cfg: ModelConfig,
        train_cfg: TrainConfig,
        seed: int,
        out_dir: str | Path,
    ):
        self.scenario = scenario_cfg.build()
        self.model_cfg = model_cfg
        self.cfg = train_cfg
        self.seed = seed
        self.out_dir = Path(out_dir)
        self.nets = PolicyNets(model_cfg, self.scenario.graph, seed)
        self.optimizer = Adam(
            self.nets.parameters(),
            lr=train_cfg.lr,
            beta1=train_cfg.beta1,
            beta2=train_cfg.beta2,
            eps=train_cfg.eps,
        )
        self.policy = NetworkPolicy(self.nets, stochastic=True)
        self.history: list[EpisodeLog] = []
        self.completed = 0

    @property
    def checkpoint_path(self) -> Path:
        return self.out_dir / CHECKPOINT_NAME

    @property
    def log_path(self) -> Path:
        return self.out_dir / TRAIN_LOG_NAME

    @property
    def checkpoint_every(self) -> int:
        return self.cfg.checkpoint_every or settings.CHECKPOINT_EVERY

    def state_arrays(self) -> dict[str, np.ndarray]:
        arrays = self.nets.state_arrays()
        arrays.update(self.optimizer.state_arrays())
        arrays["meta.episode"] = np.array([float(self.completed)])
        return arrays

    def save(self) -> Path:
        path = save_checkpoint(self.checkpoint_path, self.state_arrays())
        write_csv(self.log_path, TRAIN_LOG_HEADER, [log.row() for log in self.history])
        return path

    def resume(self) -> bool:
        """Continue from the checkpoint in out_dir if there is one."""
        if not self.checkpoint_path.is_file():
            return False
        arrays = load_checkpoint(self.checkpoint_path)
        self.nets.load_state_arrays(arrays)
        self.optimizer.load_state_arrays(arrays)
        self.completed = int(arrays.get("meta.episode", np.zeros(1)).reshape(-1)[0])
        if self.log_path.is_file():
            rows = [EpisodeLog.from_row(r) for r in read_csv(self.log_path)]
            self.history = [log for log in rows if log.episode < self.completed]
        logger.info(f"Resumed {self.checkpoint_path} at episode {self.completed}")
        return True

    def train_episode(self, episode: int) -> EpisodeLog:
        graph = self.scenario.graph
        if self.model_cfg.backbone == "ptdnet":
            p = self.model_cfg.ptdnet
            self.nets.set_temperature(
                anneal_temperature(episode, self.cfg.episodes, p.tau_start, p.tau_end)
            )

        metrics, traj = run_episode(self.scenario, self.policy, derive_seed(self.seed, "episode", episode))
        if self.model_cfg.backbone == "prognn":
            update = prognn_train_alternation(
                traj, self.nets, self.optimizer, self.cfg, self.model_cfg.prognn, graph, episode
            )
        else:
            update = a2c_update(traj, self.nets, self.optimizer, self.cfg, graph)

        return EpisodeLog(
            episode=episode,
            reward=metrics.total_reward,
            served=metrics.demand_served,
            rebal_cost=metrics.rebal_cost,
            policy_loss=update.policy_loss,
            value_loss=update.value_loss,
            entropy=update.entropy,
        )

    def _dump(self, episode: int, error: NumericError) -> NumericError:
        dump = self.out_dir / NAN_DUMP_NAME
        arrays = self.state_arrays()
        arrays["meta.failed_episode"] = np.array([float(episode)])
        save_checkpoint(dump, arrays)
        logger.error(f"Numeric abort at episode {episode}: {error}; diagnostics in {dump}")
        return NumericError(f"episode {episode}: {error}", dump_path=str(dump))

    def train(self, resume: bool = True) -> TrainResult:
        """
        Run episodes until cfg.episodes are complete.

        Raises:
            NumericError: non-finite values; parameters are dumped next to the
                checkpoint and the path is carried on the error
        """
        if resume:
            self.resume()
        self.out_dir.mkdir(parents=True, exist_ok=True)

        for episode in range(self.completed, self.cfg.episodes):
            try:
                log = self.train_episode(episode)
            except NumericError as e:
                raise self._dump(episode, e) from e
            self.history.append(log)
            self.completed = episode + 1

            if self.completed % settings.LOG_EVERY == 0:
                logger.info(
                    f"episode={self.completed} reward={log.reward:.3f} served={log.served} "
                    f"cost={log.rebal_cost:.3f} policy_loss={log.policy_loss:.4f} "
                    f"value_loss={log.value_loss:.4f} entropy={log.entropy:.4f}"
                )
            if self.completed % self.checkpoint_every == 0:
                self.save()

        path = self.save()
        return TrainResult(
            checkpoint=path, log_path=self.log_path, episodes=self.completed, history=self.history
        )
