"""Dense, graph-convolution and graph-attention layers."""

from __future__ import annotations

import numpy as np

from src.autograd import ops
from src.autograd.ops import DEFAULT_LEAKY_SLOPE
from src.autograd.tensor import Tensor
from src.graph.grid import Graph
from src.utils.exceptions import ArgumentError, DimensionError


class Dense:
    """Fully connected layer x @ W + b."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, name: str):
        self.W = Tensor.glorot(n_in, n_out, rng, name=f"{name}.W")
        self.b = Tensor.zeros(1, n_out, requires_grad=True, name=f"{name}.b")

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.W + self.b

    def parameters(self) -> dict[str, Tensor]:
        return {self.W.name: self.W, self.b.name: self.b}


class GcnLayer:
    """Single graph convolution relu(P X W); bias-free as in the propagation rule."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, name: str):
        self.W = Tensor.glorot(d_in, d_out, rng, name=f"{name}.W")

    @property
    def d_in(self) -> int:
        return self.W.shape[0]

    def parameters(self) -> dict[str, Tensor]:
        return {self.W.name: self.W}


class GatLayer:
    """Multi-head graph attention with head averaging."""

    def __init__(
        self,
        d_in: int,
        d_out: int,
        rng: np.random.Generator,
        name: str,
        heads: int = 1,
        slope: float = DEFAULT_LEAKY_SLOPE,
    ):
        if heads < 1:
            raise ArgumentError(f"GAT needs at least one head, got {heads}")
        self.slope = slope
        self.W = [Tensor.glorot(d_in, d_out, rng, name=f"{name}.W{k}") for k in range(heads)]
        self.a = [Tensor.glorot(2 * d_out, 1, rng, name=f"{name}.a{k}") for k in range(heads)]

    @property
    def heads(self) -> int:
        return len(self.W)

    @property
    def d_in(self) -> int:
        return self.W[0].shape[0]

    @property
    def d_out(self) -> int:
        return self.W[0].shape[1]

    def parameters(self) -> dict[str, Tensor]:
        params = {w.name: w for w in self.W}
        params.update({a.name: a for a in self.a})
        return params


def _as_tensor(p: Tensor | np.ndarray) -> Tensor:
    return p if isinstance(p, Tensor) else Tensor(p)


def gcn_forward(P: Tensor | np.ndarray, X: Tensor, layer: GcnLayer) -> Tensor:
    """
    Graph convolution relu(P X W).

    Args:
        P: n x n propagation matrix (constant array or tape tensor)
        X: n x d_in node features
        layer: Layer weights

    Returns:
        n x d_out node embeddings
    """
    P = _as_tensor(P)
    if X.shape[1] != layer.d_in:
        raise DimensionError(f"gcn_forward: features {X.shape} vs weights {layer.W.shape}")
    return ops.relu((P @ X) @ layer.W)


def attention_mask(graph: Graph) -> np.ndarray:
    """Neighbourhood of each node including itself."""
    return (graph.adjacency + np.eye(graph.n)) > 0


def gat_forward(
    graph: Graph, X: Tensor, layer: GatLayer, return_attention: bool = False
) -> Tensor | tuple[Tensor, list[np.ndarray]]:
    """
    Graph attention: per head, e_ij = LeakyReLU(a^T [W h_i || W h_j]) over the
    self-inclusive neighbourhood, alpha = masked row softmax of e, and the output
    relu((1/K) sum_k alpha^k W^k h).

    Args:
        graph: Station graph supplying neighbourhoods
        X: n x d_in node features
        layer: Attention weights
        return_attention: Also return each head's n x n attention matrix

    Returns:
        n x d_out embeddings, optionally with the attention matrices
    """
    if X.shape[1] != layer.d_in:
        raise DimensionError(f"gat_forward: features {X.shape} vs weights {layer.W[0].shape}")
    mask = attention_mask(graph)
    d = layer.d_out
    src_idx, dst_idx = np.arange(d), np.arange(d, 2 * d)

    total: Tensor | None = None
    attention = []
    for W, a in zip(layer.W, layer.a, strict=True):
        Wh = X @ W
        s_src = Wh @ ops.take_rows(a, src_idx)
        s_dst = Wh @ ops.take_rows(a, dst_idx)
        logits = ops.leaky_relu(s_src + s_dst.T, layer.slope)
        alpha = ops.row_softmax(logits, mask)
        attention.append(alpha.data.copy())
        head = alpha @ Wh
        total = head if total is None else total + head

    out = ops.relu(ops.scale(total, 1.0 / layer.heads))
    if return_attention:
        return out, attention
    return out
