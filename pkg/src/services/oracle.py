"""Exhaustive-search reference policy for tiny frozen-seed instances."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from src.env.demand import largest_remainder
from src.env.scenario import Scenario
from src.env.simulator import AmodState, reset, step
from src.utils.exceptions import InstanceTooLargeError
from src.utils.logger import setup_logging

logger = setup_logging(__name__)

MAX_NODES = 3
MAX_FLEET = 6
MAX_HORIZON = 12
DEFAULT_RESOLUTION = 4


@dataclass
class OracleResult:
    reward: float
    actions: list[np.ndarray]
    resolution: int


def check_oracle_bounds(scenario: Scenario) -> None:
    if scenario.n > MAX_NODES or scenario.fleet_size > MAX_FLEET or scenario.horizon > MAX_HORIZON:
        raise InstanceTooLargeError(
            f"oracle search is limited to n <= {MAX_NODES}, fleet <= {MAX_FLEET}, "
            f"T <= {MAX_HORIZON}; got n={scenario.n}, fleet={scenario.fleet_size}, "
            f"T={scenario.horizon}"
        )


def simplex_grid(n: int, resolution: int) -> list[np.ndarray]:
    """All compositions of resolution into n parts, divided by resolution."""
    points = []
    for cuts in itertools.combinations(range(resolution + n - 1), n - 1):
        bounds = (-1, *cuts, resolution + n - 1)
        parts = [bounds[i + 1] - bounds[i] - 1 for i in range(n)]
        points.append(np.array(parts, dtype=np.float64) / resolution)
    return points


def candidate_actions(scenario: Scenario, resolution: int) -> list[np.ndarray]:
    """Grid actions, one per distinct integer target they round to."""
    seen: set[bytes] = set()
    actions = []
    for desired in simplex_grid(scenario.n, resolution):
        key = largest_remainder(desired, scenario.fleet_size).tobytes()
        if key not in seen:
            seen.add(key)
            actions.append(desired)
    return actions


def oracle_search(
    scenario: Scenario, seed: int, resolution: int | None = None
) -> OracleResult:
    """
    Best total reward over all grid action sequences on the demand realised by seed.

    Dynamic programming over (t, vehicles, pending demand); the transition is a pure
    function of the state, so each distinct state is solved once. The default
    resolution is max(4, fleet_size), which reaches every integer target.

    Args:
        scenario: Instance within the size bounds
        seed: Episode seed freezing the demand realisation
        resolution: Simplex grid denominator

    Returns:
        Optimal reward and the argmax action sequence along the realised path
    """
    check_oracle_bounds(scenario)
    resolution = resolution or max(DEFAULT_RESOLUTION, scenario.fleet_size)
    actions = candidate_actions(scenario, resolution)
    memo: dict[tuple[int, bytes, bytes], tuple[float, int]] = {}

    def solve(state: AmodState) -> float:
        if state.t >= scenario.horizon:
            return 0.0
        key = (state.t, state.vehicles.tobytes(), state.pending.tobytes())
        if key in memo:
            return memo[key][0]
        best, best_index = -np.inf, 0
        for index, action in enumerate(actions):
            nxt, outcome = step(state, scenario, action)
            value = outcome.reward + solve(nxt)
            if value > best:
                best, best_index = value, index
        memo[key] = (best, best_index)
        return best

    start = reset(scenario, seed)
    solve(start)

    # summed forward in step order, as run_episode does
    path, reward = [], 0.0
    state = start
    while state.t < scenario.horizon:
        index = memo[(state.t, state.vehicles.tobytes(), state.pending.tobytes())][1]
        path.append(actions[index])
        state, outcome = step(state, scenario, actions[index])
        reward += outcome.reward

    logger.debug(f"Oracle solved {len(memo)} states with {len(actions)} actions: reward={reward}")
    return OracleResult(reward=float(reward), actions=path, resolution=resolution)
