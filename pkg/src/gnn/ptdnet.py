"""PTDNet edge sampler: a small network scores each edge and a binary-concrete
relaxation turns the scores into a differentiable soft edge mask."""

from __future__ import annotations

import numpy as np

from src.autograd import ops
from src.autograd.tensor import Tensor
from src.gnn.layers import Dense
from src.gnn.structure import GraphStructure, propagation
from src.graph.grid import Graph
from src.utils.exceptions import ArgumentError

STOCHASTIC = "stochastic"
DETERMINISTIC = "deterministic"


class PtdNetSampler:
    """Edge scorer phi: concat(x_i, x_j) -> hidden -> one logit."""

    def __init__(
        self,
        d_in: int,
        rng: np.random.Generator,
        hidden: int = 32,
        temperature: float = 1.0,
        name: str = "sampler",
    ):
        self.fc1 = Dense(2 * d_in, hidden, rng, name=f"{name}.fc1")
        self.fc2 = Dense(hidden, 1, rng, name=f"{name}.fc2")
        self.temperature = temperature

    def parameters(self) -> dict[str, Tensor]:
        return {**self.fc1.parameters(), **self.fc2.parameters()}

    def score(self, pairs: Tensor) -> Tensor:
        return self.fc2(ops.relu(self.fc1(pairs)))

    def edge_logits(self, graph: Graph, x: Tensor) -> Tensor:
        """Symmetrised logit per undirected edge, phi(x_i, x_j) + phi(x_j, x_i)."""
        xi = ops.take_rows(x, graph.edge_rows)
        xj = ops.take_rows(x, graph.edge_cols)
        return self.score(ops.concat_cols([xi, xj])) + self.score(ops.concat_cols([xj, xi]))


def draw_edge_noise(graph: Graph, rng: np.random.Generator) -> np.ndarray:
    """Difference of two independent Gumbel(0, 1) draws per undirected edge."""
    m = len(graph.edges)
    return rng.gumbel(size=(m, 1)) - rng.gumbel(size=(m, 1))


def ptdnet_sample(
    graph: Graph,
    X: Tensor,
    sampler: PtdNetSampler,
    rng: np.random.Generator | None = None,
    mode: str = STOCHASTIC,
    noise: np.ndarray | None = None,
) -> Tensor:
    """
    Soft edge mask M with M_ij = m_ij * A_ij.

    Stochastic mode draws m_ij = sigmoid((l_ij + g1 - g2) / tau); passing `noise`
    freezes g1 - g2. Deterministic mode uses m_ij = sigmoid(l_ij).

    Args:
        graph: Station graph
        X: n x d raw node features
        sampler: Edge scorer and temperature
        rng: Source of Gumbel noise when `noise` is not given
        mode: "stochastic" or "deterministic"
        noise: Frozen g1 - g2 per edge, shape (edges, 1)

    Returns:
        n x n mask tensor, zero off the edge set
    """
    if sampler.temperature <= 0:
        raise ArgumentError(f"PTDNet temperature must be positive, got {sampler.temperature}")
    if mode not in (STOCHASTIC, DETERMINISTIC):
        raise ArgumentError(f"unknown PTDNet mode {mode!r}")

    logits = sampler.edge_logits(graph, X)
    if mode == DETERMINISTIC:
        keep = ops.sigmoid(logits)
    else:
        if noise is None:
            if rng is None:
                raise ArgumentError("stochastic PTDNet sampling needs rng or frozen noise")
            noise = draw_edge_noise(graph, rng)
        keep = ops.sigmoid(ops.scale(logits + Tensor(noise), 1.0 / sampler.temperature))
    return ops.scatter_symmetric(keep, graph.edge_rows, graph.edge_cols, graph.n)


def anneal_temperature(episode: int, episodes: int, start: float, end: float) -> float:
    """Linear schedule from start at episode 0 to end at the last episode."""
    if episodes <= 1:
        return end
    frac = min(max(episode / (episodes - 1), 0.0), 1.0)
    return start + (end - start) * frac


class SampledStructure(GraphStructure):
    """Propagation through the normalised sampled subgraph."""

    kind = "ptdnet"

    def __init__(self, sampler: PtdNetSampler):
        self.sampler = sampler

    def parameters(self) -> dict[str, Tensor]:
        return self.sampler.parameters()

    def draw_noise(self, graph: Graph, rng: np.random.Generator) -> np.ndarray:
        return draw_edge_noise(graph, rng)

    def propagation(self, graph: Graph, x: Tensor, noise: np.ndarray | None = None) -> Tensor:
        mode = DETERMINISTIC if noise is None else STOCHASTIC
        return propagation(ptdnet_sample(graph, x, self.sampler, mode=mode, noise=noise))
