"""Graph structure providers: where each forward pass gets its propagation matrix."""

from __future__ import annotations

from abc import ABC, abstractmethod
from functools import lru_cache

import numpy as np

from src.autograd.tensor import Context, Function, Tensor
from src.graph.grid import Graph, normalize_adjacency
from src.utils.exceptions import DegenerateDegreeError


class NormalizedPropagation(Function):
    """P = D^-1/2 (S + I) D^-1/2 as a differentiable function of S (row-sum degrees)."""

    name = "normalize_adjacency"

    @staticmethod
    def forward(ctx: Context, s: np.ndarray) -> np.ndarray:
        a_hat = s + np.eye(s.shape[0])
        degree = a_hat.sum(axis=1)
        if np.any(degree <= 0):
            raise DegenerateDegreeError(
                f"nodes {np.flatnonzero(degree <= 0).tolist()} have zero degree"
            )
        inv_sqrt = 1.0 / np.sqrt(degree)
        ctx.save(a_hat=a_hat, degree=degree, inv_sqrt=inv_sqrt)
        # same arithmetic as normalize_adjacency, so static and refined paths agree bitwise
        return inv_sqrt[:, None] * a_hat * inv_sqrt[None, :]

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray]:
        a_hat, degree, r = ctx["a_hat"], ctx["degree"], ctx["inv_sqrt"]
        weighted = grad * a_hat
        d_r = weighted @ r + weighted.T @ r
        d_degree = d_r * (-0.5) * degree**-1.5
        return (grad * r[:, None] * r[None, :] + d_degree[:, None],)


def propagation(s: Tensor) -> Tensor:
    return NormalizedPropagation.apply(s)


@lru_cache(maxsize=64)
def static_propagation(graph: Graph) -> np.ndarray:
    p = normalize_adjacency(graph)
    p.setflags(write=False)
    return p


class GraphStructure(ABC):
    """Supplies the propagation matrix for one forward pass."""

    kind: str = "static"

    def parameters(self) -> dict[str, Tensor]:
        return {}

    def draw_noise(self, graph: Graph, rng: np.random.Generator) -> np.ndarray | None:
        """Per-step randomness to freeze for replay; None when the structure is deterministic."""
        return None

    @abstractmethod
    def propagation(self, graph: Graph, x: Tensor, noise: np.ndarray | None = None) -> Tensor:
        """n x n propagation matrix for features x."""


class StaticStructure(GraphStructure):
    """The plain normalised adjacency of the graph."""

    kind = "static"

    def propagation(self, graph: Graph, x: Tensor, noise: np.ndarray | None = None) -> Tensor:
        return Tensor._wrap(static_propagation(graph))
