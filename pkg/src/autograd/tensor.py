"""Dense fp64 tensors and the define-by-run tape that records operations on them."""

from __future__ import annotations

import itertools
from collections.abc import Mapping, Sequence
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import Any, ClassVar

import numpy as np

from src.config import settings
from src.utils.exceptions import ContractError, NumericError

_tensor_ids = itertools.count()
_active_tape: ContextVar["Tape | None"] = ContextVar("active_tape", default=None)


class Tensor:
    """Dense row-major fp64 array with an identity on the tape."""

    __slots__ = ("data", "requires_grad", "name", "id")

    def __init__(self, data: Any, requires_grad: bool = False, name: str = ""):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name
        self.id = next(_tensor_ids)

    @classmethod
    def _wrap(cls, array: np.ndarray) -> Tensor:
        """Wrap an op result without copying it."""
        out = cls.__new__(cls)
        out.data = array
        out.requires_grad = False
        out.name = ""
        out.id = next(_tensor_ids)
        return out

    @classmethod
    def zeros(cls, *shape: int, requires_grad: bool = False, name: str = "") -> Tensor:
        return cls(np.zeros(shape), requires_grad=requires_grad, name=name)

    @classmethod
    def glorot(
        cls, n_in: int, n_out: int, rng: np.random.Generator, name: str = ""
    ) -> Tensor:
        """Glorot-uniform initialised trainable matrix."""
        bound = np.sqrt(6.0 / (n_in + n_out))
        return cls(rng.uniform(-bound, bound, (n_in, n_out)), requires_grad=True, name=name)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> Tensor:
        return Tensor(self.data, name=self.name)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # Operator sugar; the op implementations live in src.autograd.ops

    def __matmul__(self, other: Tensor) -> Tensor:
        from src.autograd import ops

        return ops.matmul(self, other)

    def __add__(self, other: Tensor | float) -> Tensor:
        from src.autograd import ops

        return ops.add(self, ops.lift(other))

    def __radd__(self, other: float) -> Tensor:
        return self.__add__(other)

    def __sub__(self, other: Tensor | float) -> Tensor:
        from src.autograd import ops

        return ops.sub(self, ops.lift(other))

    def __rsub__(self, other: float) -> Tensor:
        from src.autograd import ops

        return ops.sub(ops.lift(other), self)

    def __mul__(self, other: Tensor | float) -> Tensor:
        from src.autograd import ops

        if isinstance(other, Tensor):
            return ops.mul(self, other)
        return ops.scale(self, float(other))

    def __rmul__(self, other: float) -> Tensor:
        return self.__mul__(other)

    def __neg__(self) -> Tensor:
        from src.autograd import ops

        return ops.scale(self, -1.0)

    @property
    def T(self) -> Tensor:
        from src.autograd import ops

        return ops.transpose(self)


class Context:
    """Scratch space an op fills in forward and reads in backward."""

    def __init__(self) -> None:
        self.saved: dict[str, Any] = {}

    def save(self, **values: Any) -> None:
        self.saved.update(values)

    def __getitem__(self, key: str) -> Any:
        return self.saved[key]


class Function:
    """Differentiable op: a forward rule on arrays and the matching backward rule."""

    name: ClassVar[str] = "function"

    @staticmethod
    def forward(ctx: Context, *inputs: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[np.ndarray | None, ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs: Any) -> Tensor:
        ctx = Context()
        out = Tensor._wrap(cls.forward(ctx, *(t.data for t in inputs), **kwargs))
        if settings.DEBUG_NUMERICS and not np.all(np.isfinite(out.data)):
            raise NumericError(f"{cls.name} produced non-finite values (shape {out.shape})")

        tape = _active_tape.get()
        if tape is not None and any(t.requires_grad for t in inputs):
            out.requires_grad = True
            tape.record(
                Operation(
                    function=cls,
                    ctx=ctx,
                    input_ids=tuple(t.id if t.requires_grad else None for t in inputs),
                    output_id=out.id,
                )
            )
        return out


@dataclass
class Operation:
    """One recorded op: which rule ran, on which tensors, producing which tensor."""

    function: type[Function]
    ctx: Context
    input_ids: tuple[int | None, ...]
    output_id: int


@dataclass
class Tape:
    """
    Ordered record of the ops executed while the tape is active.

    Usage:
        with Tape() as tape:
            loss = model(x)
        grads = tape.backward(loss, params)
    """

    operations: list[Operation] = field(default_factory=list)
    _token: Any = field(default=None, repr=False)

    def __enter__(self) -> Tape:
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc: object) -> None:
        _active_tape.reset(self._token)
        self._token = None

    def record(self, operation: Operation) -> None:
        self.operations.append(operation)

    def backward(
        self, loss: Tensor, params: Mapping[str, Tensor] | Sequence[Tensor]
    ) -> dict[str, np.ndarray]:
        """
        Reverse-mode sweep from a scalar loss.

        Args:
            loss: Single-element tensor produced while this tape was active
            params: Tensors to differentiate against, by name or in order

        Returns:
            Gradient per parameter (keyed by name, or by position as str for sequences);
            parameters the loss does not reach get zeros
        """
        if loss.data.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")

        grads: dict[int, np.ndarray] = {loss.id: np.ones_like(loss.data)}
        for op in reversed(self.operations):
            upstream = grads.get(op.output_id)
            if upstream is None:
                continue
            input_grads = op.function.backward(op.ctx, upstream)
            for input_id, input_grad in zip(op.input_ids, input_grads, strict=True):
                if input_id is None or input_grad is None:
                    continue
                if input_id in grads:
                    grads[input_id] = grads[input_id] + input_grad
                else:
                    grads[input_id] = input_grad

        named = params.items() if isinstance(params, Mapping) else (
            (str(i), p) for i, p in enumerate(params)
        )
        return {
            key: np.array(grads[p.id]) if p.id in grads else np.zeros_like(p.data)
            for key, p in named
        }
