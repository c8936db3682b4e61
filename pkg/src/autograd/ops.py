"""Differentiable operations over Tensor.

Every op is a Function subclass with a forward rule on numpy arrays and the
matching backward rule; the lowercase functions are the public entry points.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from scipy import special

from src.autograd.tensor import Context, Function, Tensor
from src.utils.exceptions import (
    ArgumentError,
    DegenerateRowError,
    DimensionError,
    DomainError,
)

DEFAULT_LEAKY_SLOPE = 0.2


def lift(value: Tensor | float) -> Tensor:
    """Turn a python scalar into a constant 1x1 tensor."""
    if isinstance(value, Tensor):
        return value
    return Tensor([[float(value)]])


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op: str, a: np.ndarray, b: np.ndarray) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from e


# Linear algebra


class MatMul(Function):
    name = "matmul"

    @staticmethod
    def forward(ctx: Context, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise DimensionError(f"matmul: shapes {a.shape} and {b.shape} do not agree")
        ctx.save(a=a, b=b)
        return a @ b

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return grad @ ctx["b"].T, ctx["a"].T @ grad


class Transpose(Function):
    name = "transpose"

    @staticmethod
    def forward(ctx: Context, x: np.ndarray) -> np.ndarray:
        return x.T.copy()

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray]:
        return (grad.T,)


# Elementwise arithmetic


class Add(Function):
    name = "add"

    @staticmethod
    def forward(ctx: Context, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _broadcast_shape("add", a, b)
        ctx.save(a_shape=a.shape, b_shape=b.shape)
        return a + b

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(grad, ctx["a_shape"]), _unbroadcast(grad, ctx["b_shape"])


class Sub(Function):
    name = "sub"

    @staticmethod
    def forward(ctx: Context, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _broadcast_shape("sub", a, b)
        ctx.save(a_shape=a.shape, b_shape=b.shape)
        return a - b

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(grad, ctx["a_shape"]), _unbroadcast(-grad, ctx["b_shape"])


class Mul(Function):
    name = "mul"

    @staticmethod
    def forward(ctx: Context, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        _broadcast_shape("mul", a, b)
        ctx.save(a=a, b=b)
        return a * b

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        a, b = ctx["a"], ctx["b"]
        return _unbroadcast(grad * b, a.shape), _unbroadcast(grad * a, b.shape)


class Scale(Function):
    name = "scale"

    @staticmethod
    def forward(ctx: Context, x: np.ndarray, factor: float = 1.0) -> np.ndarray:
        ctx.save(factor=factor)
        return x * factor

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray]:
        return (grad * ctx["factor"],)


# Activations


class Relu(Function):
    name = "relu"

    @staticmethod
    def forward(ctx: Context, x: np.ndarray) -> np.ndarray:
        # derivative at exactly 0 takes the left value (0)
        ctx.save(positive=x > 0)
        return np.maximum(x, 0.0)

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray]:
        return (grad * ctx["positive"],)


class LeakyRelu(Function):
    name = "leaky_relu"

    @staticmethod
    def forward(ctx: Context, x: np.ndarray, slope: float = DEFAULT_LEAKY_SLOPE) -> np.ndarray:
        positive = x > 0
        ctx.save(positive=positive, slope=slope)
        return np.where(positive, x, slope * x)

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray]:
        return (np.where(ctx["positive"], grad, ctx["slope"] * grad),)


class Sigmoid(Function):
    name = "sigmoid"

    @staticmethod
    def forward(ctx: Context, x: np.ndarray) -> np.ndarray:
        out = special.expit(x)
        ctx.save(out=out)
        return out

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray]:
        out = ctx["out"]
        return (grad * out * (1.0 - out),)


class Exp(Function):
    name = "exp"

    @staticmethod
    def forward(ctx: Context, x: np.ndarray) -> np.ndarray:
        out = np.exp(x)
        ctx.save(out=out)
        return out

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray]:
        return (grad * ctx["out"],)


class Log(Function):
    name = "log"

    @staticmethod
    def forward(ctx: Context, x: np.ndarray) -> np.ndarray:
        if np.any(x <= 0):
            raise DomainError(f"log of non-positive value (min {float(np.min(x))})")
        ctx.save(x=x)
        return np.log(x)

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray]:
        return (grad / ctx["x"],)


class Tanh(Function):
    name = "tanh"

    @staticmethod
    def forward(ctx: Context, x: np.ndarray) -> np.ndarray:
        out = np.tanh(x)
        ctx.save(out=out)
        return out

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray]:
        return (grad * (1.0 - ctx["out"] ** 2),)


ACTIVATIONS: dict[str, type[Function]] = {
    "relu": Relu,
    "leaky_relu": LeakyRelu,
    "sigmoid": Sigmoid,
    "exp": Exp,
    "log": Log,
    "tanh": Tanh,
}


# Reductions and softmax


class RowSoftmax(Function):
    name = "row_softmax"

    @staticmethod
    def forward(ctx: Context, x: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
        if x.ndim != 2:
            raise DimensionError(f"row_softmax expects a matrix, got shape {x.shape}")
        if mask is None:
            keep = np.ones(x.shape, dtype=bool)
        else:
            keep = np.asarray(mask, dtype=bool)
            if keep.shape != x.shape:
                raise DimensionError(f"row_softmax: mask {keep.shape} vs logits {x.shape}")
        empty_rows = np.flatnonzero(~keep.any(axis=1))
        if empty_rows.size:
            raise DegenerateRowError(f"row_softmax: rows {empty_rows.tolist()} fully masked")

        shifted = np.where(keep, x, -np.inf)
        shifted = shifted - shifted.max(axis=1, keepdims=True)
        e = np.where(keep, np.exp(shifted), 0.0)
        out = e / e.sum(axis=1, keepdims=True)
        ctx.save(out=out)
        return out

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray]:
        out = ctx["out"]
        return (out * (grad - (grad * out).sum(axis=1, keepdims=True)),)


class SumPool(Function):
    name = "sum_pool"

    @staticmethod
    def forward(ctx: Context, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[0] < 1:
            raise DimensionError(f"sum_pool needs at least one row, got shape {x.shape}")
        ctx.save(rows=x.shape[0])
        return x.sum(axis=0, keepdims=True)

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray]:
        return (np.repeat(grad, ctx["rows"], axis=0),)


class SumAll(Function):
    name = "sum"

    @staticmethod
    def forward(ctx: Context, x: np.ndarray) -> np.ndarray:
        ctx.save(shape=x.shape)
        return np.array([[x.sum()]])

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray]:
        return (np.full(ctx["shape"], grad.reshape(-1)[0]),)


# Indexing and assembly


class ConcatCols(Function):
    name = "concat_cols"

    @staticmethod
    def forward(ctx: Context, *parts: np.ndarray) -> np.ndarray:
        rows = {p.shape[0] for p in parts}
        if len(rows) != 1 or any(p.ndim != 2 for p in parts):
            raise DimensionError(f"concat_cols: row counts differ {[p.shape for p in parts]}")
        ctx.save(widths=[p.shape[1] for p in parts])
        return np.concatenate(parts, axis=1)

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray, ...]:
        bounds = np.cumsum(ctx["widths"])[:-1]
        return tuple(np.split(grad, bounds, axis=1))


class TakeRows(Function):
    name = "take_rows"

    @staticmethod
    def forward(ctx: Context, x: np.ndarray, index: np.ndarray | None = None) -> np.ndarray:
        idx = np.asarray(index, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= x.shape[0]):
            raise DimensionError(f"take_rows: index out of range for {x.shape[0]} rows")
        ctx.save(index=idx, shape=x.shape)
        return x[idx]

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray]:
        out = np.zeros(ctx["shape"])
        np.add.at(out, ctx["index"], grad)
        return (out,)


class ScatterSymmetric(Function):
    """Place one value per undirected edge at (i, j) and (j, i) of an n x n matrix."""

    name = "scatter_symmetric"

    @staticmethod
    def forward(
        ctx: Context,
        values: np.ndarray,
        rows: np.ndarray | None = None,
        cols: np.ndarray | None = None,
        n: int = 0,
    ) -> np.ndarray:
        r = np.asarray(rows, dtype=np.int64)
        c = np.asarray(cols, dtype=np.int64)
        flat = values.reshape(-1)
        if flat.size != r.size or r.size != c.size:
            raise DimensionError(f"scatter_symmetric: {flat.size} values for {r.size} edges")
        out = np.zeros((n, n))
        out[r, c] = flat
        out[c, r] = flat
        ctx.save(rows=r, cols=c, shape=values.shape)
        return out

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray]:
        r, c = ctx["rows"], ctx["cols"]
        return ((grad[r, c] + grad[c, r]).reshape(ctx["shape"]),)


# Special functions


class LogGamma(Function):
    name = "log_gamma"

    @staticmethod
    def forward(ctx: Context, x: np.ndarray) -> np.ndarray:
        if np.any(x <= 0):
            raise DomainError("log_gamma needs strictly positive inputs")
        ctx.save(x=x)
        return special.gammaln(x)

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray]:
        return (grad * special.digamma(ctx["x"]),)


class Digamma(Function):
    name = "digamma"

    @staticmethod
    def forward(ctx: Context, x: np.ndarray) -> np.ndarray:
        if np.any(x <= 0):
            raise DomainError("digamma needs strictly positive inputs")
        ctx.save(x=x)
        return special.digamma(x)

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray]:
        return (grad * special.polygamma(1, ctx["x"]),)


# Public API


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return MatMul.apply(a, b)


def transpose(x: Tensor) -> Tensor:
    return Transpose.apply(x)


def add(a: Tensor, b: Tensor) -> Tensor:
    return Add.apply(a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return Sub.apply(a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    return Mul.apply(a, b)


def scale(x: Tensor, factor: float) -> Tensor:
    return Scale.apply(x, factor=float(factor))


def activation(x: Tensor, kind: str, slope: float = DEFAULT_LEAKY_SLOPE) -> Tensor:
    """
    Apply an elementwise activation.

    Args:
        x: Input tensor
        kind: One of relu, leaky_relu, sigmoid, exp, log, tanh
        slope: Negative-side slope for leaky_relu

    Returns:
        Activated tensor of the same shape
    """
    function = ACTIVATIONS.get(kind)
    if function is None:
        raise ArgumentError(f"unknown activation {kind!r}; expected one of {sorted(ACTIVATIONS)}")
    if function is LeakyRelu:
        return LeakyRelu.apply(x, slope=slope)
    return function.apply(x)


def relu(x: Tensor) -> Tensor:
    return Relu.apply(x)


def leaky_relu(x: Tensor, slope: float = DEFAULT_LEAKY_SLOPE) -> Tensor:
    return LeakyRelu.apply(x, slope=slope)


def sigmoid(x: Tensor) -> Tensor:
    return Sigmoid.apply(x)


def exp(x: Tensor) -> Tensor:
    return Exp.apply(x)


def log(x: Tensor) -> Tensor:
    return Log.apply(x)


def tanh(x: Tensor) -> Tensor:
    return Tanh.apply(x)


def row_softmax(x: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Softmax over each row; masked-out entries come back as exact zeros."""
    return RowSoftmax.apply(x, mask=mask)


def sum_pool(x: Tensor) -> Tensor:
    """Column sums of an n x d tensor as a 1 x d tensor."""
    return SumPool.apply(x)


def sum_all(x: Tensor) -> Tensor:
    return SumAll.apply(x)


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    return ConcatCols.apply(*parts)


def take_rows(x: Tensor, index: Sequence[int] | np.ndarray) -> Tensor:
    return TakeRows.apply(x, index=np.asarray(index, dtype=np.int64))


def scatter_symmetric(values: Tensor, rows: np.ndarray, cols: np.ndarray, n: int) -> Tensor:
    return ScatterSymmetric.apply(values, rows=rows, cols=cols, n=n)


def log_gamma(x: Tensor) -> Tensor:
    return LogGamma.apply(x)


def digamma(x: Tensor) -> Tensor:
    return Digamma.apply(x)
