"""Actor and critic networks on a shared graph structure."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from src.autograd import ops
from src.autograd.tensor import Tensor
from src.env.rng import stream
from src.env.simulator import FEATURE_DIM
from src.gnn import BACKBONES
from src.gnn.layers import Dense, GatLayer, GcnLayer, gat_forward, gcn_forward
from src.gnn.prognn import RefinedStructure
from src.gnn.ptdnet import PtdNetSampler, SampledStructure
from src.gnn.structure import GraphStructure, StaticStructure
from src.graph.grid import Graph
from src.policy.config import ModelConfig
from src.utils.exceptions import ConfigError, DimensionError, NumericError

DENSE_LAYERS = 3


class Trunk:
    """One graph layer followed by three relu dense layers."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator, name: str):
        self.attention = config.backbone == "gat"
        if self.attention:
            self.conv: GcnLayer | GatLayer = GatLayer(
                FEATURE_DIM,
                config.hidden_dim,
                rng,
                name=f"{name}.conv",
                heads=config.gat_heads,
                slope=config.leaky_slope,
            )
        else:
            self.conv = GcnLayer(FEATURE_DIM, config.hidden_dim, rng, name=f"{name}.conv")

        widths = [config.hidden_dim] + [config.dense_dim] * DENSE_LAYERS
        self.fc = [
            Dense(widths[i], widths[i + 1], rng, name=f"{name}.fc{i + 1}")
            for i in range(DENSE_LAYERS)
        ]

    def parameters(self) -> dict[str, Tensor]:
        params = dict(self.conv.parameters())
        for layer in self.fc:
            params.update(layer.parameters())
        return params

    def __call__(self, graph: Graph, x: Tensor, P: Tensor) -> Tensor:
        if x.shape != (graph.n, FEATURE_DIM):
            raise DimensionError(f"features {x.shape} do not match ({graph.n}, {FEATURE_DIM})")
        h = gat_forward(graph, x, self.conv) if self.attention else gcn_forward(P, x, self.conv)
        for layer in self.fc:
            h = ops.relu(layer(h))
        return h


class ActorNet:
    """Per-node output o in (0, 1) and Dirichlet concentration c = 1 + kappa * o."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator, name: str = "actor"):
        self.trunk = Trunk(config, rng, name)
        self.head = Dense(config.dense_dim, 1, rng, name=f"{name}.head")
        self.kappa = config.kappa

    def parameters(self) -> dict[str, Tensor]:
        return {**self.trunk.parameters(), **self.head.parameters()}

    def __call__(self, graph: Graph, x: Tensor, P: Tensor) -> tuple[Tensor, Tensor]:
        o = ops.sigmoid(self.head(self.trunk(graph, x, P)))
        return o, ops.scale(o, self.kappa) + 1.0


class CriticNet:
    """Sum-pooled trunk embedding mapped to one state value."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator, name: str = "critic"):
        self.trunk = Trunk(config, rng, name)
        self.head = Dense(config.dense_dim, 1, rng, name=f"{name}.head")

    def parameters(self) -> dict[str, Tensor]:
        return {**self.trunk.parameters(), **self.head.parameters()}

    def __call__(self, graph: Graph, x: Tensor, P: Tensor) -> Tensor:
        return self.head(ops.sum_pool(self.trunk(graph, x, P)))


@dataclass
class Forward:
    """Everything one forward pass produces."""

    o: Tensor
    c: Tensor
    value: Tensor
    P: Tensor


def actor_forward(features: Tensor, graph: Graph, net: ActorNet, P: Tensor | None = None) -> tuple[Tensor, Tensor]:
    P = P if P is not None else StaticStructure().propagation(graph, features)
    o, c = net(graph, features, P)
    if not np.all(np.isfinite(o.data)):
        raise NumericError("actor produced non-finite outputs")
    return o, c


def critic_forward(features: Tensor, graph: Graph, net: CriticNet, P: Tensor | None = None) -> Tensor:
    P = P if P is not None else StaticStructure().propagation(graph, features)
    value = net(graph, features, P)
    if not np.all(np.isfinite(value.data)):
        raise NumericError("critic produced a non-finite value")
    return value


class PolicyNets:
    """
    Actor, critic and the graph structure they share.

    Pro-GNN's refined adjacency and PTDNet's edge sampler live in the structure and
    feed one propagation matrix to both networks; each network keeps its own weights.
    """

    def __init__(self, config: ModelConfig, graph: Graph, seed: int):
        self.config = config
        self.actor = ActorNet(config, stream(seed, "init", "actor"))
        self.critic = CriticNet(config, stream(seed, "init", "critic"))
        self.structure = build_structure(config, graph, seed)

    @property
    def backbone(self) -> str:
        return self.config.backbone

    def parameters(self) -> dict[str, Tensor]:
        """Weights the optimizer updates."""
        return {
            **self.actor.parameters(),
            **self.critic.parameters(),
            **self.structure.parameters(),
        }

    def structure_parameters(self) -> dict[str, Tensor]:
        """Tensors updated outside the optimizer (Pro-GNN's S)."""
        if isinstance(self.structure, RefinedStructure):
            return self.structure.structure_parameters()
        return {}

    def draw_noise(self, graph: Graph, rng: np.random.Generator) -> np.ndarray | None:
        return self.structure.draw_noise(graph, rng)

    def forward(self, graph: Graph, features: Tensor, noise: np.ndarray | None = None) -> Forward:
        P = self.structure.propagation(graph, features, noise)
        o, c = actor_forward(features, graph, self.actor, P)
        value = critic_forward(features, graph, self.critic, P)
        return Forward(o=o, c=c, value=value, P=P)

    def set_temperature(self, tau: float) -> None:
        if isinstance(self.structure, SampledStructure):
            self.structure.sampler.temperature = tau

    def state_arrays(self) -> dict[str, np.ndarray]:
        arrays = {name: p.data.copy() for name, p in self.parameters().items()}
        arrays.update({name: p.data.copy() for name, p in self.structure_parameters().items()})
        arrays["meta.backbone"] = np.array([float(BACKBONES.index(self.backbone))])
        return arrays

    def load_state_arrays(self, arrays: Mapping[str, np.ndarray]) -> None:
        """
        Restore weights from checkpoint entries.

        Raises:
            ConfigError: backbone, parameter set or shapes differ from this network
        """
        if "meta.backbone" in arrays:
            stored = BACKBONES[int(arrays["meta.backbone"].reshape(-1)[0])]
            if stored != self.backbone:
                raise ConfigError(
                    f"checkpoint was trained with backbone {stored!r}, config asks for {self.backbone!r}"
                )
        for name, param in self.parameters().items():
            if name not in arrays:
                raise ConfigError(f"checkpoint has no entry for {name}")
            if arrays[name].shape != param.shape:
                raise ConfigError(
                    f"checkpoint shape {arrays[name].shape} for {name} does not match {param.shape}"
                )
            param.data = arrays[name].copy()
        if isinstance(self.structure, RefinedStructure) and "structure.S" in arrays:
            self.structure.load(arrays["structure.S"])


def build_structure(config: ModelConfig, graph: Graph, seed: int) -> GraphStructure:
    if config.backbone == "prognn":
        p = config.prognn
        return RefinedStructure(
            graph,
            alpha=p.alpha,
            beta=p.beta,
            eta=p.eta,
            tau_s=p.tau_s,
            allow_fill_in=p.allow_fill_in,
        )
    if config.backbone == "ptdnet":
        sampler = PtdNetSampler(
            FEATURE_DIM,
            stream(seed, "init", "sampler"),
            hidden=config.ptdnet.hidden_dim,
            temperature=config.ptdnet.tau_start,
        )
        return SampledStructure(sampler)
    return StaticStructure()
