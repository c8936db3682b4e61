"""Central finite-difference checks of tape gradients."""

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np

from src.autograd.tensor import Tape, Tensor


@dataclass
class GradcheckResult:
    """Outcome of one finite-difference comparison."""

    name: str
    max_rel_error: float
    tolerance: float
    per_param: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.max_rel_error < self.tolerance)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max abs difference scaled by the larger of the two gradients' max magnitude."""
    scale = max(float(np.max(np.abs(analytic), initial=0.0)), float(np.max(np.abs(numeric), initial=0.0)), 1e-8)
    return float(np.max(np.abs(analytic - numeric), initial=0.0)) / scale


def numerical_gradient(
    fn: Callable[[], Tensor], param: Tensor, eps: float = 1e-6
) -> np.ndarray:
    """Central differences of a scalar-valued fn with respect to one tensor."""
    grad = np.zeros_like(param.data)
    base = param.data
    for idx in np.ndindex(*base.shape):
        bumped = base.copy()
        bumped[idx] += eps
        param.data = bumped
        plus = fn().item()
        bumped = base.copy()
        bumped[idx] -= eps
        param.data = bumped
        minus = fn().item()
        grad[idx] = (plus - minus) / (2.0 * eps)
    param.data = base
    return grad


def check_gradients(
    fn: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    name: str = "",
    eps: float = 1e-6,
    tolerance: float = 1e-4,
) -> GradcheckResult:
    """
    Compare tape gradients of fn() against central finite differences.

    Args:
        fn: Recomputes the scalar loss from the current parameter data
        params: Tensors to check
        name: Label for reports
        eps: Finite-difference step
        tolerance: Pass threshold on the max relative error

    Returns:
        GradcheckResult with the worst relative error over all parameters
    """
    with Tape() as tape:
        loss = fn()
    analytic = tape.backward(loss, params)

    per_param = {
        key: relative_error(analytic[key], numerical_gradient(fn, param, eps))
        for key, param in params.items()
    }
    worst = max(per_param.values(), default=0.0)
    return GradcheckResult(name=name, max_rel_error=worst, tolerance=tolerance, per_param=per_param)
