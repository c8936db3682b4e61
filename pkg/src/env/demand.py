"""Demand synthesis and integer apportionment."""

from __future__ import annotations

import numpy as np

from src.env.scenario import Scenario
from src.utils.exceptions import ArgumentError


def largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    """
    Split an integer total proportionally to nonnegative weights.

    Each entry gets the floor of its quota; the leftover units go to the largest
    fractional parts, ties broken by lower index.

    Args:
        weights: Nonnegative weights, not all zero when total > 0
        total: Units to distribute

    Returns:
        Integer array summing to total
    """
    weights = np.asarray(weights, dtype=np.float64)
    if total < 0:
        raise ArgumentError(f"cannot apportion a negative total {total}")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ArgumentError("apportionment weights must be finite and nonnegative")
    if total == 0:
        return np.zeros(weights.shape, dtype=np.int64)
    weight_sum = weights.sum()
    if weight_sum <= 0:
        raise ArgumentError("apportionment weights are all zero")

    quotas = weights / weight_sum * total
    counts = np.floor(quotas).astype(np.int64)
    leftover = int(total - counts.sum())
    order = np.argsort(-(quotas - counts), kind="stable")
    counts[order[:leftover]] += 1
    return counts


def synthesize_demand(scenario: Scenario, t: int, rng: np.random.Generator) -> np.ndarray:
    """Poisson trip requests per directed edge for step t, as an n x n integer matrix."""
    if not 0 <= t < scenario.horizon:
        raise ArgumentError(f"step {t} outside horizon {scenario.horizon}")
    return rng.poisson(scenario.rates(t)).astype(np.int64)
