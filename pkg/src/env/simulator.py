"""Grid-city fleet simulator: matching, rebalancing and reward accounting."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from src.autograd.tensor import Tensor
from src.env.demand import largest_remainder, synthesize_demand
from src.env.rebalancing import Flow, apply_flows, solve_transport
from src.env.rng import stream
from src.env.scenario import Scenario
from src.utils.exceptions import ActionError, EpisodeCompleteError

SIMPLEX_TOL = 1e-9
FEATURE_DIM = 4


@dataclass(frozen=True, eq=False)
class AmodState:
    """
    Fleet state at the start of a step.

    Attributes:
        t: Step index
        vehicles: Idle vehicles per node
        pending: n x n trip requests for this step, nonzero only on edges
        seed: Episode seed all later draws derive from
    """

    t: int
    vehicles: np.ndarray
    pending: np.ndarray
    seed: int


@dataclass(frozen=True)
class StepOutcome:
    reward: float
    served: int
    rebal_cost: float
    revenue: float
    flows: list[Flow] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class MatchResult:
    served: np.ndarray
    revenue: float
    vehicles: np.ndarray

    @property
    def total_served(self) -> int:
        return int(self.served.sum())


def reset(scenario: Scenario, seed: int) -> AmodState:
    """Uniform fleet (remainder to the lowest indices) and the demand of step 0."""
    vehicles = largest_remainder(np.ones(scenario.n), scenario.fleet_size)
    pending = synthesize_demand(scenario, 0, stream(seed, "demand", 0))
    return AmodState(t=0, vehicles=vehicles, pending=pending, seed=seed)


def match_demand(state: AmodState, scenario: Scenario) -> MatchResult:
    """
    Serve pending trips from each origin's idle vehicles.

    An origin with fewer vehicles than requests rations them proportionally with
    largest-remainder rounding. Served vehicles end the step at their destination;
    unserved requests are dropped.
    """
    served = np.zeros_like(state.pending)
    for i in range(scenario.n):
        row = state.pending[i]
        requested = int(row.sum())
        if requested == 0:
            continue
        if requested <= state.vehicles[i]:
            served[i] = row
        else:
            served[i] = largest_remainder(row, int(state.vehicles[i]))

    vehicles = state.vehicles - served.sum(axis=1) + served.sum(axis=0)
    revenue = scenario.price_per_trip * int(served.sum())
    return MatchResult(served=served, revenue=revenue, vehicles=vehicles)


def validate_action(desired: np.ndarray, n: int) -> np.ndarray:
    desired = np.asarray(desired, dtype=np.float64)
    if desired.shape != (n,):
        raise ActionError(f"action has shape {desired.shape}, expected ({n},)")
    if not np.all(np.isfinite(desired)) or np.any(desired < 0):
        raise ActionError("action entries must be finite and nonnegative")
    if abs(desired.sum() - 1.0) > SIMPLEX_TOL:
        raise ActionError(f"action sums to {desired.sum():.12f}, expected 1")
    return desired


def rebalance(
    state: AmodState, scenario: Scenario, desired: np.ndarray
) -> tuple[list[Flow], float, np.ndarray]:
    """
    Move idle vehicles towards the desired fleet distribution.

    Args:
        state: State whose vehicle counts are rebalanced
        scenario: Supplies path costs and fleet size
        desired: Simplex vector over nodes

    Returns:
        (flows, cost, vehicles after rebalancing)
    """
    desired = validate_action(desired, scenario.n)
    target = largest_remainder(desired, scenario.fleet_size)
    flows, cost = solve_transport(state.vehicles, target, scenario.path_costs)
    return flows, cost, apply_flows(state.vehicles, flows)


def step(state: AmodState, scenario: Scenario, action: np.ndarray) -> tuple[AmodState, StepOutcome]:
    """
    Advance one step: match, rebalance, tick the clock, then draw the next demand.

    Randomness comes from the stream ("demand", t + 1) of the state's episode seed,
    so the transition is a pure function of (state, scenario, action).
    """
    if state.t >= scenario.horizon:
        raise EpisodeCompleteError(f"episode already finished at t={state.t}")

    matched = match_demand(state, scenario)
    flows, cost, vehicles = rebalance(replace(state, vehicles=matched.vehicles), scenario, action)

    t = state.t + 1
    if t < scenario.horizon:
        pending = synthesize_demand(scenario, t, stream(state.seed, "demand", t))
        if scenario.carry_over:
            pending = pending + (state.pending - matched.served)
    else:
        pending = np.zeros_like(state.pending)

    outcome = StepOutcome(
        reward=matched.revenue - cost,
        served=matched.total_served,
        rebal_cost=cost,
        revenue=matched.revenue,
        flows=flows,
    )
    return AmodState(t=t, vehicles=vehicles, pending=pending, seed=state.seed), outcome


def node_features(state: AmodState, scenario: Scenario) -> Tensor:
    """Per node: [vehicles, outgoing demand, incoming demand] / fleet and t / T."""
    fleet = float(scenario.fleet_size)
    features = np.column_stack(
        [
            state.vehicles / fleet,
            state.pending.sum(axis=1) / fleet,
            state.pending.sum(axis=0) / fleet,
            np.full(scenario.n, state.t / scenario.horizon),
        ]
    )
    return Tensor(features)


def current_distribution(state: AmodState, scenario: Scenario) -> np.ndarray:
    """
    The action that leaves every vehicle where matching puts it.

    Rebalancing acts on the post-matching counts, so the distribution is taken
    after this step's trips have moved their vehicles.
    """
    return match_demand(state, scenario).vehicles / float(scenario.fleet_size)
