"""Unit tests for grid graphs, propagation matrices and path costs."""

import itertools

import numpy as np
import pytest

from src.graph.grid import (
    build_grid,
    graph_from_edges,
    normalize_adjacency,
    permute_graph,
    shortest_path_costs,
)
from src.utils.exceptions import ArgumentError, ConnectivityError


@pytest.mark.parametrize("k, nodes, edges", [(1, 1, 0), (2, 4, 4), (4, 16, 24), (5, 25, 40)])
def test_build_grid_sizes(k, nodes, edges):
    """Test node and edge counts follow k^2 and 2k(k-1)."""
    graph = build_grid(k)
    assert graph.n == nodes
    assert len(graph.edges) == edges
    assert graph.k == k


def test_build_grid_row_major_neighbours():
    """Test node = row * k + col with 4-neighbourhood links."""
    graph = build_grid(3)
    assert graph.neighbors(4) == [1, 3, 5, 7]
    assert graph.neighbors(0) == [1, 3]


def test_build_grid_eight_neighbourhood_adds_diagonals():
    """Test diagonals with neighborhood=8."""
    graph = build_grid(2, neighborhood=8)
    assert len(graph.edges) == 6


def test_build_grid_adjacency_invariants():
    """Test symmetric 0/1 adjacency with zero diagonal and sorted edges."""
    graph = build_grid(3)
    a = graph.adjacency
    assert np.array_equal(a, a.T)
    assert np.all(np.diag(a) == 0)
    assert set(np.unique(a)) <= {0.0, 1.0}
    assert list(graph.edges) == sorted(graph.edges)
    assert all(i < j for i, j in graph.edges)


def test_build_grid_rejects_bad_arguments():
    """Test k < 1 and a non-positive cost."""
    with pytest.raises(ArgumentError):
        build_grid(0)
    with pytest.raises(ArgumentError):
        build_grid(2, base_cost=0.0)
    with pytest.raises(ArgumentError):
        build_grid(2, neighborhood=6)


def test_cost_override_must_be_an_edge():
    """Test overrides on non-edges are rejected."""
    with pytest.raises(ArgumentError):
        build_grid(2, cost_overrides=[(0, 3, 2.0)])


def test_normalize_single_node():
    """Test P = [[1]] for one isolated node."""
    assert normalize_adjacency(build_grid(1)).tolist() == [[1.0]]


def test_normalize_two_nodes():
    """Test one edge gives 0.5 everywhere."""
    P = normalize_adjacency(graph_from_edges(2, [(0, 1)]))
    np.testing.assert_allclose(P, np.full((2, 2), 0.5))


def test_normalize_triangle():
    """Test K3 gives 1/3 everywhere."""
    P = normalize_adjacency(graph_from_edges(3, [(0, 1), (1, 2), (0, 2)]))
    np.testing.assert_allclose(P, np.full((3, 3), 1 / 3))


def test_normalize_grid_is_symmetric_with_unit_spectral_radius():
    """Test P is symmetric and its largest eigenvalue is 1."""
    P = normalize_adjacency(build_grid(4))
    np.testing.assert_allclose(P, P.T)
    assert np.max(np.abs(np.linalg.eigvalsh(P))) == pytest.approx(1.0)


def test_normalize_rejects_bad_matrices():
    """Test asymmetric and negative inputs."""
    with pytest.raises(ArgumentError):
        normalize_adjacency(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ArgumentError):
        normalize_adjacency(np.array([[0.0, -1.0], [-1.0, 0.0]]))


def test_shortest_path_costs():
    """Test a path edge cost and the 2x2 grid corner distance."""
    np.testing.assert_allclose(
        shortest_path_costs(graph_from_edges(2, [(0, 1)], base_cost=2.5)), [[0, 2.5], [2.5, 0]]
    )
    costs = shortest_path_costs(build_grid(2))
    assert costs[0, 3] == 2.0
    assert costs[1, 2] == 2.0
    assert costs[0, 1] == 1.0


def test_shortest_path_uses_overrides():
    """Test an expensive edge is routed around."""
    graph = build_grid(2, cost_overrides=[(0, 1, 10.0)])
    assert shortest_path_costs(graph)[0, 1] == 3.0


def test_shortest_path_disconnected():
    """Test an unreachable pair raises ConnectivityError."""
    with pytest.raises(ConnectivityError):
        shortest_path_costs(graph_from_edges(3, [(0, 1)]))


def _cheapest_simple_path(graph, s: int, t: int) -> float:
    others = [v for v in range(graph.n) if v not in (s, t)]
    best = float("inf")
    for length in range(len(others) + 1):
        for middle in itertools.permutations(others, length):
            route = (s, *middle, t)
            if all(graph.adjacency[a, b] for a, b in itertools.pairwise(route)):
                best = min(best, sum(graph.edge_cost[a, b] for a, b in itertools.pairwise(route)))
    return best


def test_shortest_path_matches_route_enumeration():
    """Test Dijkstra against every simple route on random connected graphs of up to 5 nodes."""
    rng = np.random.default_rng(31)
    for _ in range(50):
        n = int(rng.integers(2, 6))
        edges = {(int(rng.integers(j)), j) for j in range(1, n)}
        edges |= {(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.4}
        overrides = [(i, j, float(rng.uniform(0.5, 5.0))) for i, j in sorted(edges)]
        graph = graph_from_edges(n, sorted(edges), cost_overrides=overrides)

        costs = shortest_path_costs(graph)

        for s in range(n):
            for t in range(n):
                expected = 0.0 if s == t else _cheapest_simple_path(graph, s, t)
                assert costs[s, t] == pytest.approx(expected)


def test_permute_graph_relabels_nodes():
    """Test permuting keeps the graph isomorphic."""
    graph = graph_from_edges(3, [(0, 1), (1, 2)], cost_overrides=[(1, 2, 4.0)])
    perm = [2, 0, 1]
    permuted = permute_graph(graph, perm)
    np.testing.assert_array_equal(
        permuted.adjacency, graph.adjacency[np.ix_(perm, perm)]
    )
    np.testing.assert_array_equal(
        permuted.edge_cost, graph.edge_cost[np.ix_(perm, perm)]
    )
