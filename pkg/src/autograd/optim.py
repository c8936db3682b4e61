"""Adam optimizer and gradient utilities."""

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from src.autograd.tensor import Tensor
from src.utils.exceptions import ArgumentError, DimensionError


@dataclass
class AdamState:
    """First/second moment accumulators per parameter plus the step counter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


def adam_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    """
    Apply one bias-corrected Adam update in place.

    Args:
        params: Trainable tensors by name (their data is replaced)
        grads: Gradient per parameter name; missing names are treated as zero
        state: Moment accumulators from the previous step
        lr: Learning rate, must be positive
        beta1: First-moment decay
        beta2: Second-moment decay
        eps: Denominator floor

    Returns:
        The advanced AdamState (same object, step incremented)
    """
    if lr <= 0:
        raise ArgumentError(f"Adam learning rate must be positive, got {lr}")

    for name, param in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(param.data)
        if grad.shape != param.shape:
            raise DimensionError(
                f"adam_step: gradient {grad.shape} does not match parameter {name} {param.shape}"
            )
        if name in state.m and state.m[name].shape != param.shape:
            raise DimensionError(
                f"adam_step: moment {state.m[name].shape} does not match parameter {name} {param.shape}"
            )

    state.step += 1
    bias1 = 1.0 - beta1**state.step
    bias2 = 1.0 - beta2**state.step
    for name, param in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(param.data)
        m = beta1 * state.m.get(name, np.zeros_like(param.data)) + (1.0 - beta1) * grad
        v = beta2 * state.v.get(name, np.zeros_like(param.data)) + (1.0 - beta2) * grad**2
        state.m[name], state.v[name] = m, v
        param.data = param.data - lr * (m / bias1) / (np.sqrt(v / bias2) + eps)
    return state


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_grad_norm(
    grads: Mapping[str, np.ndarray], max_norm: float
) -> tuple[dict[str, np.ndarray], float]:
    """Rescale gradients so their global L2 norm is at most max_norm."""
    norm = global_norm(grads)
    if max_norm <= 0 or norm <= max_norm:
        return dict(grads), norm
    factor = max_norm / norm
    return {name: g * factor for name, g in grads.items()}, norm


class Adam:
    """Adam bound to a fixed parameter set."""

    def __init__(
        self,
        params: Mapping[str, Tensor],
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if lr <= 0:
            raise ArgumentError(f"Adam learning rate must be positive, got {lr}")
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState()

    def step(self, grads: Mapping[str, np.ndarray]) -> None:
        adam_step(self.params, grads, self.state, self.lr, self.beta1, self.beta2, self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Flatten the moments into checkpoint entries."""
        arrays = {"adam.step": np.array([float(self.state.step)])}
        for name in self.params:
            if name in self.state.m:
                arrays[f"adam.m.{name}"] = self.state.m[name]
                arrays[f"adam.v.{name}"] = self.state.v[name]
        return arrays

    def load_state_arrays(self, arrays: Mapping[str, np.ndarray]) -> None:
        if "adam.step" not in arrays:
            return
        self.state = AdamState(step=int(arrays["adam.step"].reshape(-1)[0]))
        for name, param in self.params.items():
            m = arrays.get(f"adam.m.{name}")
            v = arrays.get(f"adam.v.{name}")
            if m is None or v is None:
                continue
            if m.shape != param.shape or v.shape != param.shape:
                raise DimensionError(f"checkpoint moments for {name} do not match {param.shape}")
            self.state.m[name] = m.copy()
            self.state.v[name] = v.copy()
