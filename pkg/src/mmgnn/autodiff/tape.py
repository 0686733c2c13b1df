"""Reverse-mode tape over dense 2-D float64 tensors.

Operations record a node onto the active tape when at least one input is
tracked (a Parameter, or a tensor produced on the same tape). `backward`
walks the nodes in strict reverse recording order, once each.

    with Tape() as tape:
        loss = ops.sum_all(ops.matmul(x, w))
    tape.backward(loss)
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

# grads of the output -> one grad (or None) per parent
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_local = threading.local()


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


class NonFiniteError(ArithmeticError):
    """Raised when an operation produces NaN or infinity."""


# ---------------------------------------------------------------------------
# Tensors
# ---------------------------------------------------------------------------

class Tensor:
    """A 2-D float64 value, optionally bound to a node of a tape."""

    __slots__ = ("values", "tape_id", "_tape")

    def __init__(
        self,
        values: np.ndarray,
        tape_id: Optional[int] = None,
        tape: Optional[Tape] = None,
    ) -> None:
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 0:
            values = values.reshape(1, 1)
        if values.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got shape {values.shape}")
        self.values = values
        self.tape_id = tape_id
        self._tape = tape

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def item(self) -> float:
        if self.values.size != 1:
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.values[0, 0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, tracked={self.tape_id is not None})"


class Parameter(Tensor):
    """A learnable leaf; gradients accumulate into `grad` across backward passes."""

    __slots__ = ("name", "grad")

    def __init__(self, values: np.ndarray, name: str) -> None:
        super().__init__(np.array(values, dtype=np.float64, copy=True))
        self.name = name
        self.grad = np.zeros_like(self.values)

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def assign(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.values.shape:
            raise ShapeError(f"{self.name}: cannot assign {values.shape} into {self.values.shape}")
        self.values[...] = values

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape})"


# ---------------------------------------------------------------------------
# Tape
# ---------------------------------------------------------------------------

@dataclass
class _Node:
    parents: tuple[Optional[int], ...]
    backward: Optional[BackwardFn]
    leaf: Optional[Parameter] = None


class Tape:
    """Ordered record of operations; confined to the thread that opened it."""

    def __init__(self) -> None:
        self._nodes: list[_Node] = []
        self._leaves: dict[int, int] = {}  # id(Parameter) -> node index
        self._previous: Optional[Tape] = None

    def __enter__(self) -> Tape:
        self._previous = current_tape()
        _local.tape = self
        return self

    def __exit__(self, *exc: object) -> None:
        _local.tape = self._previous
        self._previous = None

    def __len__(self) -> int:
        return len(self._nodes)

    def node_of(self, tensor: Tensor) -> Optional[int]:
        """Node index for `tensor` on this tape, registering Parameters on first use."""
        if isinstance(tensor, Parameter):
            key = id(tensor)
            if key not in self._leaves:
                self._leaves[key] = len(self._nodes)
                self._nodes.append(_Node(parents=(), backward=None, leaf=tensor))
            return self._leaves[key]
        if tensor._tape is self:
            return tensor.tape_id
        return None

    def record(self, parents: tuple[Optional[int], ...], backward: BackwardFn) -> int:
        self._nodes.append(_Node(parents=parents, backward=backward))
        return len(self._nodes) - 1

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(param) into every reachable Parameter's `grad`."""
        if loss.values.size != 1:
            raise ShapeError(f"backward() needs a scalar loss, got {loss.shape}")
        start = self.node_of(loss)
        if start is None:
            return
        grads: list[Optional[np.ndarray]] = [None] * len(self._nodes)
        grads[start] = np.ones_like(loss.values)
        for index in range(start, -1, -1):
            g = grads[index]
            if g is None:
                continue
            grads[index] = None
            node = self._nodes[index]
            if node.leaf is not None:
                node.leaf.grad += g
                continue
            for parent, contribution in zip(node.parents, node.backward(g)):  # type: ignore[misc]
                if parent is None or contribution is None:
                    continue
                if grads[parent] is None:
                    grads[parent] = contribution
                else:
                    grads[parent] = grads[parent] + contribution


def current_tape() -> Optional[Tape]:
    return getattr(_local, "tape", None)


def record(
    values: np.ndarray,
    inputs: Sequence[Tensor],
    backward: BackwardFn,
    op: str,
) -> Tensor:
    """Wrap an op result, attaching a tape node when any input is tracked."""
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{op} produced non-finite values")
    tape = current_tape()
    if tape is None:
        return Tensor(values)
    parents = tuple(tape.node_of(t) for t in inputs)
    if all(p is None for p in parents):
        return Tensor(values)
    return Tensor(values, tape_id=tape.record(parents, backward), tape=tape)
