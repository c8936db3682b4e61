"""Scalar special functions used by the Dirichlet policy density."""

import math

from scipy import special

from src.utils.exceptions import DomainError


def _check_positive(name: str, x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"{name} needs a finite x > 0, got {x}")
    return x


def special_log_gamma(x: float) -> float:
    """log Γ(x) for x > 0."""
    return float(special.gammaln(_check_positive("log_gamma", x)))


def special_digamma(x: float) -> float:
    """ψ(x) = d/dx log Γ(x) for x > 0."""
    return float(special.digamma(_check_positive("digamma", x)))


def special_trigamma(x: float) -> float:
    """ψ'(x) for x > 0."""
    return float(special.polygamma(1, _check_positive("trigamma", x)))
