"""Grid-city AMoD environment."""

from src.env.scenario import DemandConfig, GraphConfig, Scenario, ScenarioConfig
from src.env.simulator import AmodState, StepOutcome, node_features, reset, step

__all__ = [
    "AmodState",
    "DemandConfig",
    "GraphConfig",
    "Scenario",
    "ScenarioConfig",
    "StepOutcome",
    "node_features",
    "reset",
    "step",
]
