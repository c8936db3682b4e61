"""Dense-tensor reverse-mode differentiation and the Adam optimizer."""

from src.autograd.optim import Adam, AdamState, adam_step, clip_grad_norm
from src.autograd.tensor import Function, Tape, Tensor

__all__ = [
    "Adam",
    "AdamState",
    "Function",
    "Tape",
    "Tensor",
    "adam_step",
    "backward",
    "clip_grad_norm",
]


def backward(tape: Tape, loss: Tensor, params):
    """Gradient of a scalar loss recorded on tape with respect to params."""
    return tape.backward(loss, params)
