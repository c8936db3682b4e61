"""Dirichlet action head: sampling, log-density and entropy."""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from src.autograd import ops
from src.autograd.tensor import Tensor
from src.utils.exceptions import ArgumentError
from src.utils.logger import setup_logging

logger = setup_logging(__name__)

MIN_COMPONENT = 1e-12


def _check_concentration(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    if c.size == 0 or np.any(~np.isfinite(c)) or np.any(c <= 0):
        raise ArgumentError("Dirichlet concentrations must be finite and positive")
    return c


def sample_dirichlet(c: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Dirichlet draw by normalising independent Gamma(c_i, 1) variates."""
    c = _check_concentration(c)
    g = rng.standard_gamma(c)
    a = g / g.sum()
    if np.any(a < MIN_COMPONENT):
        logger.debug(f"Clamping {int(np.sum(a < MIN_COMPONENT))} Dirichlet components to {MIN_COMPONENT}")
        a = np.maximum(a, MIN_COMPONENT)
        a = a / a.sum()
    return a


def dirichlet_log_pdf(c: np.ndarray, a: np.ndarray) -> float:
    c = _check_concentration(c)
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    return float(gammaln(c.sum()) - gammaln(c).sum() + np.sum((c - 1.0) * np.log(a)))


def sample_action(c: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """
    Draw a rebalancing action from Dirichlet(c).

    Returns:
        (simplex vector a, log Dirichlet density of a)
    """
    a = sample_dirichlet(c, rng)
    return a, dirichlet_log_pdf(c, a)


def mean_action(c: np.ndarray) -> np.ndarray:
    c = _check_concentration(c)
    return c / c.sum()


def log_density(c: Tensor, a: np.ndarray) -> Tensor:
    """
    log Gamma(sum c) - sum log Gamma(c_i) + sum (c_i - 1) log a_i, recorded on the tape.

    Args:
        c: n x 1 concentrations
        a: Simplex vector of length n

    Returns:
        1 x 1 tensor
    """
    log_a = Tensor(np.log(np.asarray(a, dtype=np.float64)).reshape(c.shape))
    return (
        ops.log_gamma(ops.sum_all(c))
        - ops.sum_all(ops.log_gamma(c))
        + ops.sum_all(ops.mul(c - 1.0, log_a))
    )


def entropy(c: Tensor) -> Tensor:
    """Differential entropy of Dirichlet(c) as a 1 x 1 tensor."""
    n = c.size
    c0 = ops.sum_all(c)
    return (
        ops.sum_all(ops.log_gamma(c))
        - ops.log_gamma(c0)
        + ops.mul(c0 - float(n), ops.digamma(c0))
        - ops.sum_all(ops.mul(c - 1.0, ops.digamma(c)))
    )
