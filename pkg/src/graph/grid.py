"""Station grid graphs, propagation matrices and travel costs."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from src.utils.exceptions import (
    ArgumentError,
    ConnectivityError,
    DegenerateDegreeError,
)

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Graph:
    """
    Undirected station graph.

    Attributes:
        n: Number of nodes
        edges: Undirected pairs (i, j) with i < j, sorted
        adjacency: n x n 0/1 symmetric matrix with zero diagonal
        edge_cost: n x n travel cost per vehicle per hop, positive exactly on edges
        k: Grid side length (0 for graphs not built from a grid)
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: np.ndarray
    edge_cost: np.ndarray
    k: int = 0

    def __post_init__(self) -> None:
        self.adjacency.setflags(write=False)
        self.edge_cost.setflags(write=False)

    @property
    def edge_rows(self) -> np.ndarray:
        return np.array([i for i, _ in self.edges], dtype=np.int64)

    @property
    def edge_cols(self) -> np.ndarray:
        return np.array([j for _, j in self.edges], dtype=np.int64)

    def neighbors(self, i: int) -> list[int]:
        return np.flatnonzero(self.adjacency[i]).tolist()

    def directed_edges(self) -> list[tuple[int, int]]:
        """Both orientations of every edge, ordered by (origin, destination)."""
        return sorted([(i, j) for i, j in self.edges] + [(j, i) for i, j in self.edges])


def graph_from_edges(
    n: int,
    edges: Iterable[tuple[int, int]],
    base_cost: float = 1.0,
    cost_overrides: Sequence[Sequence[float]] = (),
    k: int = 0,
) -> Graph:
    """
    Assemble a Graph from an undirected edge list.

    Args:
        n: Node count
        edges: Undirected pairs
        base_cost: Cost of every edge unless overridden
        cost_overrides: [i, j, cost] triples replacing individual edge costs
        k: Grid side, when the graph is a grid

    Returns:
        Graph instance
    """
    if n < 1:
        raise ArgumentError(f"graph needs at least one node, got n={n}")
    if base_cost <= 0:
        raise ArgumentError(f"base_cost must be positive, got {base_cost}")

    adjacency = np.zeros((n, n))
    for i, j in edges:
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise ArgumentError(f"invalid edge ({i}, {j}) for {n} nodes")
        adjacency[i, j] = adjacency[j, i] = 1.0

    edge_cost = adjacency * base_cost
    for i, j, cost in cost_overrides:
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n) or adjacency[i, j] != 1.0:
            raise ArgumentError(f"cost override ({i}, {j}) is not an edge")
        if cost <= 0:
            raise ArgumentError(f"cost override ({i}, {j}) must be positive, got {cost}")
        edge_cost[i, j] = edge_cost[j, i] = float(cost)

    rows, cols = np.nonzero(np.triu(adjacency))
    pairs = tuple(sorted(zip(rows.tolist(), cols.tolist(), strict=True)))
    return Graph(n=n, edges=pairs, adjacency=adjacency, edge_cost=edge_cost, k=k)


def build_grid(
    k: int,
    base_cost: float = 1.0,
    neighborhood: int = 4,
    cost_overrides: Sequence[Sequence[float]] = (),
) -> Graph:
    """
    Build the k x k station lattice.

    Nodes are numbered row-major (node = row * k + col). The 4-neighborhood links
    up/down/left/right neighbours; the 8-neighborhood adds diagonals.

    Args:
        k: Grid side length, at least 1
        base_cost: Cost of every edge
        neighborhood: 4 or 8
        cost_overrides: [i, j, cost] triples

    Returns:
        Graph with k*k nodes
    """
    if k < 1:
        raise ArgumentError(f"grid side k must be at least 1, got {k}")
    if neighborhood not in (4, 8):
        raise ArgumentError(f"neighborhood must be 4 or 8, got {neighborhood}")

    offsets = [(0, 1), (1, 0)]
    if neighborhood == 8:
        offsets += [(1, 1), (1, -1)]

    edges = []
    for r in range(k):
        for c in range(k):
            for dr, dc in offsets:
                rr, cc = r + dr, c + dc
                if 0 <= rr < k and 0 <= cc < k:
                    a, b = r * k + c, rr * k + cc
                    edges.append((min(a, b), max(a, b)))

    return graph_from_edges(k * k, edges, base_cost, cost_overrides, k=k)


def normalize_adjacency(adjacency: Graph | np.ndarray) -> np.ndarray:
    """
    Symmetric normalised propagation matrix P = D^-1/2 (A + I) D^-1/2.

    Accepts a Graph or any nonnegative symmetric n x n matrix standing in for A
    (a refined or masked adjacency).

    Returns:
        n x n fp64 matrix
    """
    a = adjacency.adjacency if isinstance(adjacency, Graph) else np.asarray(adjacency, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ArgumentError(f"adjacency must be square, got shape {a.shape}")
    if np.any(a < 0):
        raise ArgumentError("adjacency has negative entries")
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL:
        raise ArgumentError("adjacency is not symmetric")

    a_hat = a + np.eye(a.shape[0])
    degree = a_hat.sum(axis=1)
    if np.any(degree <= 0):
        raise DegenerateDegreeError(f"nodes {np.flatnonzero(degree <= 0).tolist()} have zero degree")
    inv_sqrt = 1.0 / np.sqrt(degree)
    return inv_sqrt[:, None] * a_hat * inv_sqrt[None, :]


def shortest_path_costs(graph: Graph) -> np.ndarray:
    """
    All-pairs shortest-path travel cost under edge_cost.

    Raises:
        ConnectivityError: some pair of nodes is unreachable
    """
    costs = shortest_path(csr_matrix(graph.edge_cost), method="D", directed=False)
    if not np.all(np.isfinite(costs)):
        raise ConnectivityError(f"graph with {graph.n} nodes is not connected")
    costs = np.minimum(costs, costs.T)
    np.fill_diagonal(costs, 0.0)
    return costs


def permute_graph(graph: Graph, perm: Sequence[int]) -> Graph:
    """Relabel nodes so that old node perm[i] becomes new node i."""
    perm = np.asarray(perm, dtype=np.int64)
    if sorted(perm.tolist()) != list(range(graph.n)):
        raise ArgumentError("perm is not a permutation of the node set")
    inverse = np.argsort(perm)
    edges = [(int(inverse[i]), int(inverse[j])) for i, j in graph.edges]
    edges = [(min(a, b), max(a, b)) for a, b in edges]
    overrides = [
        (int(inverse[i]), int(inverse[j]), float(graph.edge_cost[i, j])) for i, j in graph.edges
    ]
    return graph_from_edges(graph.n, edges, 1.0, overrides)
