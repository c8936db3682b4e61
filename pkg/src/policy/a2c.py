"""Advantage actor-critic with Monte-Carlo returns."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from src.autograd import ops
from src.autograd.optim import Adam, clip_grad_norm
from src.autograd.tensor import Tape, Tensor
from src.graph.grid import Graph
from src.policy.config import TrainConfig
from src.policy.dirichlet import entropy, log_density
from src.policy.networks import PolicyNets
from src.utils.exceptions import ArgumentError, ContractError, NumericError


@dataclass
class StepRecord:
    """One transition as seen by the learner."""

    features: Tensor
    action: np.ndarray
    log_density: float
    reward: float
    value: float
    noise: np.ndarray | None = None
    served: int = 0
    rebal_cost: float = 0.0
    revenue: float = 0.0
    vehicles: np.ndarray | None = None


@dataclass
class Trajectory:
    steps: list[StepRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def append(self, record: StepRecord) -> None:
        self.steps.append(record)

    @property
    def rewards(self) -> list[float]:
        return [s.reward for s in self.steps]

    def validate(self) -> None:
        if not self.steps:
            raise ContractError("trajectory is empty")
        if not np.all(np.isfinite(self.rewards)):
            raise NumericError("trajectory contains non-finite rewards")


@dataclass
class LossTerms:
    policy_loss: Tensor
    value_loss: Tensor
    entropy: Tensor
    total: Tensor


@dataclass
class UpdateResult:
    policy_loss: float
    value_loss: float
    entropy: float
    grad_norm: float
    structure_grads: dict[str, np.ndarray] = field(default_factory=dict)


def discounted_returns(rewards: Sequence[float], gamma: float) -> list[float]:
    """R_t = r_t + gamma * R_{t+1}, with R_{T-1} = r_{T-1}."""
    if len(rewards) == 0:
        raise ArgumentError("discounted_returns needs at least one reward")
    returns = [0.0] * len(rewards)
    running = 0.0
    for t in reversed(range(len(rewards))):
        running = float(rewards[t]) + gamma * running
        returns[t] = running
    return returns


def a2c_loss(traj: Trajectory, nets: PolicyNets, graph: Graph, cfg: TrainConfig) -> LossTerms:
    """
    Replay the trajectory through the networks and assemble the A2C loss.

    The advantage R_t - V(s_t) uses a detached value in the policy term.
    total = policy_loss + value_coef * value_loss - entropy_coef * entropy
    """
    returns = discounted_returns([r * cfg.reward_scale for r in traj.rewards], cfg.gamma)

    policy_terms, value_terms, entropy_terms = [], [], []
    for record, R in zip(traj.steps, returns, strict=True):
        fwd = nets.forward(graph, record.features, record.noise)
        advantage = R - fwd.value.item()
        policy_terms.append(ops.scale(log_density(fwd.c, record.action), -advantage))
        error = R - fwd.value
        value_terms.append(ops.mul(error, error))
        entropy_terms.append(entropy(fwd.c))

    policy_loss = _sum(policy_terms)
    value_loss = _sum(value_terms)
    ent = _sum(entropy_terms)
    total = policy_loss + ops.scale(value_loss, cfg.value_coef) - ops.scale(ent, cfg.entropy_coef)
    return LossTerms(policy_loss=policy_loss, value_loss=value_loss, entropy=ent, total=total)


def _sum(terms: list[Tensor]) -> Tensor:
    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return total


def a2c_update(
    traj: Trajectory,
    nets: PolicyNets,
    optimizer: Adam,
    cfg: TrainConfig,
    graph: Graph,
) -> UpdateResult:
    """
    One Adam step on every network weight from a complete episode.

    Returns:
        Loss values, the pre-clip gradient norm and the gradient with respect to
        any structure tensors (Pro-GNN's S), which the optimizer does not touch
    """
    traj.validate()
    params = nets.parameters()
    structure = nets.structure_parameters()

    with Tape() as tape:
        terms = a2c_loss(traj, nets, graph, cfg)
    if not np.isfinite(terms.total.item()):
        raise NumericError(
            f"non-finite A2C loss (policy={terms.policy_loss.item()}, value={terms.value_loss.item()})"
        )

    grads = tape.backward(terms.total, {**params, **structure})
    clipped, norm = clip_grad_norm({name: grads[name] for name in params}, cfg.grad_clip)
    optimizer.step(clipped)

    return UpdateResult(
        policy_loss=terms.policy_loss.item(),
        value_loss=terms.value_loss.item(),
        entropy=terms.entropy.item(),
        grad_norm=norm,
        structure_grads={name: grads[name] for name in structure},
    )


def structure_gradient(
    traj: Trajectory, nets: PolicyNets, cfg: TrainConfig, graph: Graph
) -> dict[str, np.ndarray]:
    """Gradient of the A2C loss with respect to the structure tensors only."""
    structure = nets.structure_parameters()
    if not structure:
        return {}
    with Tape() as tape:
        terms = a2c_loss(traj, nets, graph, cfg)
    return tape.backward(terms.total, structure)
