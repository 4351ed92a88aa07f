"""Named parameter slots with gradient and Adam moment buffers."""

import numpy as np

from ..errors import DimensionError, NumericError


class Slot:
    """One trainable matrix: value, grad, and Adam first/second moments."""

    __slots__ = ("value", "grad", "adam_m", "adam_v")

    def __init__(self, value: np.ndarray):
        value = np.asarray(value, dtype=np.float64)
        if value.ndim == 1:
            value = value.reshape(1, -1)
        if value.ndim != 2:
            raise DimensionError(f"parameter slots must be 2-D, got shape {value.shape}")
        self.value = value
        self.grad = np.zeros_like(value)
        self.adam_m = np.zeros_like(value)
        self.adam_v = np.zeros_like(value)


class ParamStore:
    """All trainable parameters of one model, keyed by name."""

    def __init__(self):
        self.slots: dict[str, Slot] = {}
        self.step_count = 0

    def add(self, name: str, value: np.ndarray) -> Slot:
        if name in self.slots:
            raise ValueError(f"duplicate parameter slot {name!r}")
        slot = Slot(value)
        self.slots[name] = slot
        return slot

    def __getitem__(self, name: str) -> Slot:
        return self.slots[name]

    def __contains__(self, name: str) -> bool:
        return name in self.slots

    def names(self) -> list[str]:
        return sorted(self.slots)

    def zero_grads(self) -> None:
        for slot in self.slots.values():
            slot.grad[:] = 0.0

    def num_params(self) -> int:
        return sum(s.value.size for s in self.slots.values())

    def copy(self) -> "ParamStore":
        dup = ParamStore()
        dup.step_count = self.step_count
        for name in self.names():
            slot = dup.add(name, self.slots[name].value.copy())
            slot.grad = self.slots[name].grad.copy()
            slot.adam_m = self.slots[name].adam_m.copy()
            slot.adam_v = self.slots[name].adam_v.copy()
        return dup


def glorot_uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Uniform init in ±sqrt(6/(fan_in+fan_out))."""
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def global_grad_norm(store: ParamStore) -> float:
    total = 0.0
    for name in store.names():
        g = store[name].grad
        total += float(np.dot(g.ravel(), g.ravel()))
    return float(np.sqrt(total))


def clip_gradients(store: ParamStore, max_norm: float) -> float:
    """Scale all grads so the global norm is at most ``max_norm``; returns the pre-clip norm."""
    norm = global_grad_norm(store)
    if norm > max_norm:
        scale = max_norm / norm
        for name in store.names():
            store[name].grad *= scale
    return norm


def adam_step(store: ParamStore, lr: float, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    """Adam update with bias correction; zeroes grads and bumps step_count.

    Aborts without touching any parameter if any gradient is non-finite.
    """
    for name in store.names():
        if not np.isfinite(store[name].grad).all():
            raise NumericError(f"non-finite gradient in slot {name!r}; step aborted")
    store.step_count += 1
    t = store.step_count
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for name in store.names():
        slot = store[name]
        g = slot.grad
        slot.adam_m *= beta1
        slot.adam_m += (1.0 - beta1) * g
        slot.adam_v *= beta2
        slot.adam_v += (1.0 - beta2) * (g * g)
        m_hat = slot.adam_m / bc1
        v_hat = slot.adam_v / bc2
        slot.value -= lr * m_hat / (np.sqrt(v_hat) + eps)
        slot.grad[:] = 0.0
