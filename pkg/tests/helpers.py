"""Independent numeric oracles shared by the test suite.

These deliberately avoid the library's own differentiation/optimizer code:
gradients come from central differences, Adam from a scalar reference loop,
matmul/DFT oracles from naive loops.
"""

import numpy as np


def central_diff_grad(f, arr: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of scalar f() w.r.t. arr, mutated in place."""
    grad = np.zeros_like(arr)
    flat = arr.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f()
        flat[i] = orig - eps
        fm = f()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * eps)
    return grad


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """Max elementwise |a-n| / max(|a|, |n|, floor)."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float((np.abs(a - n) / denom).max())


def reference_adam_scalar(grad_fn, w0: float, lr: float, steps: int,
                          beta1: float = 0.9, beta2: float = 0.999,
                          eps: float = 1e-8) -> float:
    """Textbook scalar Adam with bias correction."""
    w, m, v = w0, 0.0, 0.0
    for t in range(1, steps + 1):
        g = grad_fn(w)
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1 ** t)
        v_hat = v / (1 - beta2 ** t)
        w -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return w


def naive_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Triple-loop matrix product."""
    rows, inner = a.shape
    inner2, cols = b.shape
    assert inner == inner2
    out = np.zeros((rows, cols))
    for i in range(rows):
        for j in range(cols):
            acc = 0.0
            for k in range(inner):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc
    return out


def naive_dft_power(x: np.ndarray, n_fft: int) -> np.ndarray:
    """Power spectrum |DFT|^2 of the zero-padded signal, straight from the definition
    (explicit cos/sin correlations per bin; no FFT algorithm involved)."""
    padded = np.zeros(n_fft)
    padded[: len(x)] = x
    n = np.arange(n_fft)
    out = np.zeros(n_fft // 2 + 1)
    for k in range(out.size):
        ang = -2.0 * np.pi * k * n / n_fft
        re = float(np.dot(padded, np.cos(ang)))
        im = float(np.dot(padded, np.sin(ang)))
        out[k] = re * re + im * im
    return out


def brute_force_recalls(confusion: np.ndarray):
    """Per-class recall, UA and WA straight from the definitions."""
    recalls = []
    for k in range(confusion.shape[0]):
        row_total = confusion[k].sum()
        if row_total > 0:
            recalls.append(confusion[k, k] / row_total)
    ua = float(np.mean(recalls))
    wa = float(np.trace(confusion) / confusion.sum())
    return recalls, ua, wa


def model_param_gradcheck(make_loss, store, eps: float = 1e-5) -> float:
    """Worst relative error between the analytic grads already sitting in
    ``store`` and central differences of ``make_loss`` over every slot.

    ``make_loss()`` must run a fresh forward pass off the store's current
    values; slots are perturbed in place and restored.
    """
    worst = 0.0
    for name in store.names():
        slot = store[name]
        analytic = slot.grad.copy()
        numeric = central_diff_grad(make_loss, slot.value, eps)
        worst = max(worst, max_rel_error(analytic, numeric))
    return worst


def gradcheck_op(build, arrays: dict, eps: float = 1e-5) -> float:
    """Max relative error between tape gradients and central differences.

    ``build(tape, nodes)`` runs the op(s) under test and returns a 1x1 loss
    node; ``arrays`` holds the float64 leaf inputs by name.
    """
    from serkit import numcore as nc

    def run():
        tape = nc.Tape()
        nodes = {k: nc.Node(v.copy()) for k, v in arrays.items()}
        return tape, nodes, build(tape, nodes)

    tape, nodes, loss = run()
    nc.backward(tape, loss)
    analytic = {
        k: (nodes[k].grad if nodes[k].grad is not None else np.zeros_like(arrays[k]))
        for k in arrays
    }
    worst = 0.0
    for k in arrays:
        numeric = central_diff_grad(lambda: run()[2].value[0, 0], arrays[k], eps)
        worst = max(worst, max_rel_error(analytic[k], numeric))
    return worst
