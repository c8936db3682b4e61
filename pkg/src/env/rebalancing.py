"""Min-cost transportation of idle vehicles from surplus to deficit stations."""

from __future__ import annotations

import numpy as np
from ortools.graph.python import min_cost_flow

from src.utils.exceptions import ContractError, NumericError
from src.utils.logger import setup_logging

logger = setup_logging(__name__)

# Path costs are fp64 currency; the solver works in integer micro-units
COST_SCALE = 1_000_000

Flow = tuple[int, int, int]


def solve_transport(
    current: np.ndarray, target: np.ndarray, path_costs: np.ndarray
) -> tuple[list[Flow], float]:
    """
    Cheapest integer flows turning the current vehicle counts into the target counts.

    Args:
        current: Vehicles per node
        target: Desired vehicles per node, same total as current
        path_costs: All-pairs shortest-path cost per vehicle

    Returns:
        Flows (origin, destination, count) sorted by origin then destination,
        and their total cost sum(count * path_cost)
    """
    current = np.asarray(current, dtype=np.int64)
    target = np.asarray(target, dtype=np.int64)
    if current.sum() != target.sum():
        raise ContractError(f"transport totals differ: {current.sum()} vs {target.sum()}")

    surplus = np.flatnonzero(current > target)
    deficit = np.flatnonzero(current < target)
    if surplus.size == 0:
        return [], 0.0

    smcf = min_cost_flow.SimpleMinCostFlow()
    tails = np.repeat(np.arange(surplus.size), deficit.size)
    heads = surplus.size + np.tile(np.arange(deficit.size), surplus.size)
    origins = surplus[tails]
    destinations = deficit[heads - surplus.size]
    capacities = (current - target)[origins]
    unit_costs = np.rint(path_costs[origins, destinations] * COST_SCALE).astype(np.int64)
    arcs = smcf.add_arcs_with_capacity_and_unit_cost(tails, heads, capacities, unit_costs)

    supplies = np.concatenate([(current - target)[surplus], (current - target)[deficit]])
    smcf.set_nodes_supplies(np.arange(supplies.size), supplies)

    status = smcf.solve()
    if status != smcf.OPTIMAL:
        logger.error(f"Min-cost flow failed with status {status}")
        raise NumericError(f"transportation solve failed with status {status}")

    flows: list[Flow] = []
    for arc, amount in zip(arcs, smcf.flows(arcs), strict=True):
        if amount > 0:
            flows.append((int(origins[arc]), int(destinations[arc]), int(amount)))
    flows.sort()
    cost = float(sum(count * path_costs[o, d] for o, d, count in flows))
    return flows, cost


def apply_flows(vehicles: np.ndarray, flows: list[Flow]) -> np.ndarray:
    moved = np.array(vehicles, dtype=np.int64)
    for origin, destination, count in flows:
        moved[origin] -= count
        moved[destination] += count
    return moved
