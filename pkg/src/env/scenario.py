"""Scenario configuration and its compiled runtime form."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.graph.grid import Graph, build_grid, graph_from_edges, shortest_path_costs
from src.utils.exceptions import ScenarioError
from src.utils.logger import setup_logging

logger = setup_logging(__name__)


class GraphConfig(BaseModel):
    """Either a k x k grid (k) or an explicit graph (n plus edges)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    k: int | None = Field(default=4, ge=1)
    neighborhood: Literal[4, 8] = 4
    base_cost: float = Field(default=1.0, gt=0)
    cost_overrides: list[tuple[int, int, float]] = Field(default_factory=list)
    n: int | None = Field(default=None, ge=1)
    edges: list[tuple[int, int]] | None = None

    @model_validator(mode="after")
    def _grid_or_edges(self) -> GraphConfig:
        if self.edges is not None:
            if self.n is None:
                raise ValueError("explicit edges need the node count n")
        elif self.k is None:
            raise ValueError("graph needs either k or n plus edges")
        return self

    def build(self) -> Graph:
        try:
            if self.edges is not None:
                return graph_from_edges(self.n, self.edges, self.base_cost, self.cost_overrides)
            return build_grid(self.k, self.base_cost, self.neighborhood, self.cost_overrides)
        except ValueError as e:
            raise ScenarioError(f"invalid graph: {e}") from e


class DemandConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    pattern: Literal["uniform", "commuter_pulse"] = "commuter_pulse"
    base_rate: float = Field(default=1.0, ge=0)
    rate_overrides: list[tuple[int, int, float]] = Field(default_factory=list)
    skew: float = Field(default=0.5, ge=0, le=1)
    time_profile: list[float] = Field(default_factory=list)
    carry_over: bool = False


class ScenarioConfig(BaseModel):
    """Scenario JSON: graph, fleet, horizon, price and demand model."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = "commuter-pulse"
    graph: GraphConfig = Field(default_factory=GraphConfig)
    fleet_size: int = Field(default=32, ge=1)
    horizon: int = Field(default=20, ge=1)
    price_per_trip: float = Field(default=10.0, ge=0)
    demand: DemandConfig = Field(default_factory=DemandConfig)

    @model_validator(mode="after")
    def _profile_matches_horizon(self) -> ScenarioConfig:
        profile = self.demand.time_profile
        if profile and len(profile) != self.horizon:
            raise ValueError(
                f"demand.time_profile has {len(profile)} entries, horizon is {self.horizon}"
            )
        if any(m < 0 for m in profile):
            raise ValueError("demand.time_profile entries must be nonnegative")
        return self

    def build(self) -> Scenario:
        return Scenario.from_config(self)

    def rescaled(self, k: int) -> ScenarioConfig:
        """
        Same scenario family on a k x k grid.

        Per-edge rates are kept and the fleet scales with the node count,
        fleet' = max(1, round(fleet * (k / k0)^2)). Index-based overrides do not
        carry over to a different grid and are dropped.
        """
        if k < 1:
            raise ScenarioError(f"grid side k must be at least 1, got {k}")
        if self.graph.k is None or self.graph.edges is not None:
            raise ScenarioError("only grid scenarios can be rescaled")
        if k == self.graph.k:
            return self
        if self.graph.cost_overrides or self.demand.rate_overrides:
            logger.warning(f"Dropping index-based overrides while rescaling {self.name} to k={k}")
        fleet = max(1, round(self.fleet_size * (k / self.graph.k) ** 2))
        return self.model_copy(
            update={
                "graph": self.graph.model_copy(update={"k": k, "cost_overrides": []}),
                "demand": self.demand.model_copy(update={"rate_overrides": []}),
                "fleet_size": fleet,
            }
        )


def center_distance(graph: Graph) -> np.ndarray:
    """Manhattan distance of each grid node to the grid centre; hop count from node 0 otherwise."""
    if graph.k and graph.k * graph.k == graph.n:
        rows, cols = np.divmod(np.arange(graph.n), graph.k)
        center = (graph.k - 1) / 2.0
        return np.abs(rows - center) + np.abs(cols - center)
    return shortest_path_costs(graph_from_edges(graph.n, graph.edges))[0]


@dataclass(frozen=True, eq=False)
class Scenario:
    """
    Compiled scenario.

    Attributes:
        config: Source configuration
        graph: Station graph
        base_rates: n x n per-directed-edge Poisson rate before time effects
        inbound: n x n mask of edges heading towards the centre
        outbound: n x n mask of edges heading away from the centre
    """

    config: ScenarioConfig
    graph: Graph
    base_rates: np.ndarray
    inbound: np.ndarray
    outbound: np.ndarray

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> Scenario:
        graph = config.graph.build()
        rates = graph.adjacency * config.demand.base_rate
        for i, j, rate in config.demand.rate_overrides:
            i, j = int(i), int(j)
            if not (0 <= i < graph.n and 0 <= j < graph.n) or graph.adjacency[i, j] != 1.0:
                raise ScenarioError(f"demand rate override ({i}, {j}) is not an edge")
            if rate < 0:
                raise ScenarioError(f"demand rate override ({i}, {j}) must be nonnegative")
            rates[i, j] = float(rate)

        dist = center_distance(graph)
        towards = dist[None, :] < dist[:, None]
        away = dist[None, :] > dist[:, None]
        edge = graph.adjacency > 0
        return cls(
            config=config,
            graph=graph,
            base_rates=rates,
            inbound=towards & edge,
            outbound=away & edge,
        )

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def fleet_size(self) -> int:
        return self.config.fleet_size

    @property
    def horizon(self) -> int:
        return self.config.horizon

    @property
    def price_per_trip(self) -> float:
        return self.config.price_per_trip

    @property
    def carry_over(self) -> bool:
        return self.config.demand.carry_over

    @cached_property
    def path_costs(self) -> np.ndarray:
        return shortest_path_costs(self.graph)

    def time_multiplier(self, t: int) -> float:
        profile = self.config.demand.time_profile
        return float(profile[t]) if profile else 1.0

    def rates(self, t: int) -> np.ndarray:
        """Poisson rate per directed edge at step t."""
        rates = self.base_rates * self.time_multiplier(t)
        if self.config.demand.pattern == "commuter_pulse":
            skew = self.config.demand.skew
            morning = t < self.horizon / 2
            toward, away = (1 + skew, 1 - skew) if morning else (1 - skew, 1 + skew)
            rates = np.where(self.inbound, rates * toward, rates)
            rates = np.where(self.outbound, rates * away, rates)
        return rates
