"""Station graph package."""

from src.graph.grid import (
    Graph,
    build_grid,
    graph_from_edges,
    normalize_adjacency,
    shortest_path_costs,
)

__all__ = [
    "Graph",
    "build_grid",
    "graph_from_edges",
    "normalize_adjacency",
    "shortest_path_costs",
]
