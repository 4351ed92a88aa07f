"""Reverse-mode tape over 2-D float64 matrices.

Every differentiable op appends a backward closure to the tape; ``backward``
replays them in exact reverse execution order. Values are always 2-D float64
(scalars are 1×1). One tape per forward pass; a tape is consumed by backward
and cannot be reused.
"""

import numpy as np

from ..errors import DimensionError, NumericError, StateError

# When True, every op output is checked for NaN/Inf. Loss, gradients and head
# outputs are always checked regardless; this flag extends the check to every
# intermediate (used by the test suite, costs ~10% on large batches).
_DEBUG_CHECKS = False


def set_debug_checks(enabled: bool) -> None:
    global _DEBUG_CHECKS
    _DEBUG_CHECKS = bool(enabled)


def debug_checks_enabled() -> bool:
    return _DEBUG_CHECKS


class Node:
    """A matrix value on the tape with a gradient slot."""

    __slots__ = ("value", "grad", "const")

    def __init__(self, value: np.ndarray, const: bool = False):
        value = np.asarray(value, dtype=np.float64)
        if value.ndim == 1:
            value = value.reshape(1, -1)
        if value.ndim != 2:
            raise DimensionError(f"node values must be 2-D matrices, got shape {value.shape}")
        self.value = value
        self.grad = None
        self.const = const

    @property
    def shape(self):
        return self.value.shape

    def accumulate(self, g: np.ndarray) -> None:
        if self.const:
            return
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def __repr__(self):
        kind = "const" if self.const else "node"
        return f"<{kind} {self.value.shape[0]}x{self.value.shape[1]}>"


class Tape:
    """Ordered record of executed ops, sufficient to run backward once."""

    def __init__(self):
        self._entries = []
        self._param_nodes = {}
        self._consumed = False

    def record(self, backward_fn) -> None:
        if self._consumed:
            raise StateError("cannot record on a consumed tape; build a new tape per forward pass")
        self._entries.append(backward_fn)

    def const(self, value) -> Node:
        return Node(value, const=True)

    def out(self, value: np.ndarray) -> Node:
        if _DEBUG_CHECKS and not np.isfinite(value).all():
            raise NumericError("op produced non-finite values")
        return Node(value)

    def param(self, store, name: str) -> Node:
        """Node view of a parameter slot; cached so repeated use shares one node."""
        key = (id(store), name)
        entry = self._param_nodes.get(key)
        if entry is None:
            node = Node(store[name].value)
            self._param_nodes[key] = (store, name, node)
            return node
        return entry[2]

    @property
    def num_entries(self) -> int:
        return len(self._entries)


def backward(tape: Tape, loss: Node) -> None:
    """Populate gradients for all parameters reachable from ``loss``.

    After this call the tape is consumed; parameter gradients are accumulated
    into their store slots (untouched slots keep their zero grad).
    """
    if tape._consumed:
        raise StateError("backward already ran on this tape; re-run forward first")
    if not tape._entries:
        raise StateError("backward called without a recorded forward pass")
    if loss.value.shape != (1, 1):
        raise DimensionError(f"loss must be a 1x1 scalar, got shape {loss.value.shape}")
    tape._consumed = True
    loss.grad = np.ones((1, 1), dtype=np.float64)
    for fn in reversed(tape._entries):
        fn()
    for store, name, node in tape._param_nodes.values():
        if node.grad is not None:
            store[name].grad += node.grad
