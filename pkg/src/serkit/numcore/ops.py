"""Differentiable ops over tape nodes.

Batched variable-length sequences use a flat row-major layout: a padded batch
of B sequences of T_max frames is a (B*T_max)×n matrix whose row b*T_max+t is
frame t of sequence b, plus a boolean validity mask of length B*T_max. The
segment_* ops pool along time in that layout and are mask-aware: padded rows
never contribute to means, maxima or attention weights.
"""

import numpy as np

from ..errors import ConfigError, DataError, DimensionError
from .tape import Node, Tape


def _check_cols(a: Node, b: Node, what: str):
    if a.value.shape[1] != b.value.shape[0]:
        raise DimensionError(
            f"{what}: inner dimensions disagree, {a.value.shape} vs {b.value.shape}"
        )


def matmul(tape: Tape, a: Node, b: Node) -> Node:
    _check_cols(a, b, "matmul")
    out = tape.out(a.value @ b.value)

    def bw(a=a, b=b, out=out):
        if out.grad is None:
            return
        if not a.const:
            a.accumulate(out.grad @ b.value.T)
        if not b.const:
            b.accumulate(a.value.T @ out.grad)

    tape.record(bw)
    return out


def add(tape: Tape, a: Node, b: Node) -> Node:
    """Elementwise add; ``b`` may be a 1×n row broadcast over a's rows."""
    broadcast = b.value.shape[0] == 1 and a.value.shape[0] != 1
    if a.value.shape != b.value.shape and not (broadcast and a.value.shape[1] == b.value.shape[1]):
        raise DimensionError(f"add: incompatible shapes {a.value.shape} vs {b.value.shape}")
    out = tape.out(a.value + b.value)

    def bw(a=a, b=b, out=out, broadcast=broadcast):
        if out.grad is None:
            return
        if not a.const:
            a.accumulate(out.grad)
        if not b.const:
            b.accumulate(out.grad.sum(axis=0, keepdims=True) if broadcast else out.grad)

    tape.record(bw)
    return out


def mul(tape: Tape, a: Node, b: Node) -> Node:
    if a.value.shape != b.value.shape:
        raise DimensionError(f"mul: incompatible shapes {a.value.shape} vs {b.value.shape}")
    out = tape.out(a.value * b.value)

    def bw(a=a, b=b, out=out):
        if out.grad is None:
            return
        if not a.const:
            a.accumulate(out.grad * b.value)
        if not b.const:
            b.accumulate(out.grad * a.value)

    tape.record(bw)
    return out


def scale(tape: Tape, a: Node, c) -> Node:
    """Multiply by a constant scalar or broadcastable constant array."""
    c = np.asarray(c, dtype=np.float64)
    out = tape.out(a.value * c)

    def bw(a=a, out=out, c=c):
        if out.grad is None or a.const:
            return
        g = out.grad * c
        a.accumulate(g)

    tape.record(bw)
    return out


def dense_forward(tape: Tape, x: Node, w: Node, b: Node) -> Node:
    """out[t] = x[t]·W + b, one fused tape entry."""
    if x.value.shape[1] != w.value.shape[0]:
        raise DimensionError(
            f"dense_forward: x has shape {x.value.shape} but W has shape {w.value.shape}"
        )
    if b.value.shape != (1, w.value.shape[1]):
        raise DimensionError(
            f"dense_forward: bias shape {b.value.shape} does not match W {w.value.shape}"
        )
    out = tape.out(x.value @ w.value + b.value)

    def bw(x=x, w=w, b=b, out=out):
        if out.grad is None:
            return
        if not x.const:
            x.accumulate(out.grad @ w.value.T)
        if not w.const:
            w.accumulate(x.value.T @ out.grad)
        if not b.const:
            b.accumulate(out.grad.sum(axis=0, keepdims=True))

    tape.record(bw)
    return out


def relu_forward(tape: Tape, x: Node) -> Node:
    out = tape.out(np.maximum(x.value, 0.0))

    def bw(x=x, out=out):
        if out.grad is None or x.const:
            return
        x.accumulate(out.grad * (x.value > 0.0))

    tape.record(bw)
    return out


def tanh_forward(tape: Tape, x: Node) -> Node:
    y = np.tanh(x.value)
    out = tape.out(y)

    def bw(x=x, out=out, y=y):
        if out.grad is None or x.const:
            return
        x.accumulate(out.grad * (1.0 - y * y))

    tape.record(bw)
    return out


def sigmoid_forward(tape: Tape, x: Node) -> Node:
    # Stable in both tails: exp of a non-positive argument only.
    v = x.value
    y = np.where(v >= 0, 1.0 / (1.0 + np.exp(-np.abs(v))),
                 np.exp(-np.abs(v)) / (1.0 + np.exp(-np.abs(v))))
    out = tape.out(y)

    def bw(x=x, out=out, y=y):
        if out.grad is None or x.const:
            return
        x.accumulate(out.grad * y * (1.0 - y))

    tape.record(bw)
    return out


def dropout_forward(tape: Tape, x: Node, rate: float, training: bool,
                    rng: np.random.Generator) -> Node:
    """Inverted dropout: survivors scaled by 1/(1-rate); identity at inference."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = (rng.random(x.value.shape) >= rate) / (1.0 - rate)
    out = tape.out(x.value * keep)

    def bw(x=x, out=out, keep=keep):
        if out.grad is None or x.const:
            return
        x.accumulate(out.grad * keep)

    tape.record(bw)
    return out


def softmax_xent(tape: Tape, logits: Node, labels: np.ndarray):
    """Mean cross-entropy over the batch with log-sum-exp stabilization.

    Returns (loss node 1×1, probs array B×K). The fused gradient
    (probs - onehot)/B flows to the logits; probs is a plain array.
    """
    labels = np.asarray(labels)
    batch, k = logits.value.shape
    if labels.shape != (batch,):
        raise DimensionError(f"labels must have shape ({batch},), got {labels.shape}")
    for i, lab in enumerate(labels):
        if not 0 <= lab < k:
            raise DataError(f"label {lab} at index {i} out of range for {k} classes")
    shifted = logits.value - logits.value.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - lse
    probs = np.exp(logp)
    loss_val = -logp[np.arange(batch), labels].mean()
    if not np.isfinite(loss_val):
        raise DataError("non-finite loss from softmax_xent")
    loss = tape.out(np.array([[loss_val]]))

    def bw(logits=logits, loss=loss, probs=probs, labels=labels, batch=batch):
        if loss.grad is None or logits.const:
            return
        g = probs.copy()
        g[np.arange(batch), labels] -= 1.0
        logits.accumulate(loss.grad[0, 0] * g / batch)

    tape.record(bw)
    return loss, probs


def concat_cols(tape: Tape, parts: list[Node]) -> Node:
    rows = parts[0].value.shape[0]
    for p in parts:
        if p.value.shape[0] != rows:
            raise DimensionError("concat_cols: row counts differ")
    out = tape.out(np.concatenate([p.value for p in parts], axis=1))
    widths = [p.value.shape[1] for p in parts]

    def bw(parts=parts, out=out, widths=widths):
        if out.grad is None:
            return
        start = 0
        for p, w in zip(parts, widths):
            if not p.const:
                p.accumulate(out.grad[:, start:start + w])
            start += w

    tape.record(bw)
    return out


def slice_cols(tape: Tape, x: Node, start: int, stop: int) -> Node:
    out = tape.out(x.value[:, start:stop].copy())

    def bw(x=x, out=out, start=start, stop=stop):
        if out.grad is None or x.const:
            return
        g = np.zeros_like(x.value)
        g[:, start:stop] = out.grad
        x.accumulate(g)

    tape.record(bw)
    return out


def reduce_sum(tape: Tape, x: Node) -> Node:
    out = tape.out(np.array([[x.value.sum()]]))

    def bw(x=x, out=out):
        if out.grad is None or x.const:
            return
        x.accumulate(np.full_like(x.value, out.grad[0, 0]))

    tape.record(bw)
    return out


def lstm_cell_forward(tape: Tape, x_t: Node, h_prev: Node, c_prev: Node,
                      w_x: Node, w_h: Node, b: Node):
    """One LSTM step: sigmoid input/forget/output gates, tanh candidate.

    Gate pre-activations are packed [i, f, g, o] along the 4H columns of
    w_x (in×4H), w_h (H×4H) and b (1×4H). Returns (h_t, c_t), both B×H.
    Built from primitive ops, so the backward pass comes from the tape.
    """
    hidden = h_prev.value.shape[1]
    if w_x.value.shape != (x_t.value.shape[1], 4 * hidden):
        raise DimensionError(
            f"lstm_cell_forward: w_x shape {w_x.value.shape} does not match "
            f"input {x_t.value.shape} with hidden size {hidden}"
        )
    if w_h.value.shape != (hidden, 4 * hidden):
        raise DimensionError(f"lstm_cell_forward: w_h shape {w_h.value.shape} != ({hidden}, {4*hidden})")
    if c_prev.value.shape != h_prev.value.shape:
        raise DimensionError("lstm_cell_forward: h_prev and c_prev shapes differ")
    z = add(tape, add(tape, matmul(tape, x_t, w_x), matmul(tape, h_prev, w_h)), b)
    gate_i = sigmoid_forward(tape, slice_cols(tape, z, 0, hidden))
    gate_f = sigmoid_forward(tape, slice_cols(tape, z, hidden, 2 * hidden))
    cand = tanh_forward(tape, slice_cols(tape, z, 2 * hidden, 3 * hidden))
    gate_o = sigmoid_forward(tape, slice_cols(tape, z, 3 * hidden, 4 * hidden))
    c_t = add(tape, mul(tape, gate_f, c_prev), mul(tape, gate_i, cand))
    h_t = mul(tape, gate_o, tanh_forward(tape, c_t))
    return h_t, c_t


def stack_time(tape: Tape, steps: list[Node], batch: int) -> Node:
    """Stack T per-timestep B×H nodes into the flat (B*T)×H row-major layout."""
    t_max = len(steps)
    h = steps[0].value.shape[1]
    out_val = np.stack([s.value for s in steps], axis=1).reshape(batch * t_max, h)
    out = tape.out(out_val)

    def bw(steps=steps, out=out, batch=batch, t_max=t_max, h=h):
        if out.grad is None:
            return
        g3 = out.grad.reshape(batch, t_max, h)
        for t, s in enumerate(steps):
            if not s.const:
                s.accumulate(g3[:, t, :])

    tape.record(bw)
    return out


def unstack_time(tape: Tape, x: Node, batch: int, t_max: int) -> list[Node]:
    """Split a flat (B*T)×D node into T per-timestep B×D nodes."""
    d = x.value.shape[1]
    if x.value.shape[0] != batch * t_max:
        raise DimensionError(f"unstack_time: {x.value.shape[0]} rows != {batch}*{t_max}")
    x3 = x.value.reshape(batch, t_max, d)
    outs = []
    for t in range(t_max):
        out = tape.out(x3[:, t, :].copy())

        def bw(x=x, out=out, t=t, batch=batch, t_max=t_max, d=d):
            if out.grad is None or x.const:
                return
            g = np.zeros((batch, t_max, d))
            g[:, t, :] = out.grad
            x.accumulate(g.reshape(batch * t_max, d))

        tape.record(bw)
        outs.append(out)
    return outs


def _as_mask3(mask: np.ndarray, batch: int, t_max: int) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool).reshape(batch, t_max)
    if not mask.any(axis=1).all():
        raise DataError("every sequence in a batch needs at least one valid frame")
    return mask


def uniform_alpha(tape: Tape, mask: np.ndarray, batch: int, t_max: int) -> Node:
    """Constant per-frame weights 1/len for valid frames, 0 for padding."""
    m = _as_mask3(mask, batch, t_max)
    weights = m / m.sum(axis=1, keepdims=True)
    return tape.const(weights.reshape(batch * t_max, 1))


def segment_softmax(tape: Tape, scores: Node, mask: np.ndarray, batch: int, t_max: int) -> Node:
    """Softmax over each sequence's frames; padded frames get weight exactly 0."""
    if scores.value.shape != (batch * t_max, 1):
        raise DimensionError(f"segment_softmax: scores shape {scores.value.shape} != ({batch*t_max}, 1)")
    m = _as_mask3(mask, batch, t_max)
    s = scores.value.reshape(batch, t_max)
    s = np.where(m, s, -np.inf)
    shifted = s - s.max(axis=1, keepdims=True)
    e = np.exp(shifted)                      # exp(-inf) == 0 on padding
    alpha = e / e.sum(axis=1, keepdims=True)
    out = tape.out(alpha.reshape(batch * t_max, 1))

    def bw(scores=scores, out=out, alpha=alpha, batch=batch, t_max=t_max):
        if out.grad is None or scores.const:
            return
        g = out.grad.reshape(batch, t_max)
        dot = (g * alpha).sum(axis=1, keepdims=True)
        scores.accumulate((alpha * (g - dot)).reshape(batch * t_max, 1))

    tape.record(bw)
    return out


def segment_weighted_sum(tape: Tape, alpha: Node, x: Node, batch: int, t_max: int) -> Node:
    """pooled[b] = sum_t alpha[b,t] * x[b,t]; the single pooling primitive.

    Mean pooling is this op with constant uniform weights, so attention pooling
    with uniform weights is bitwise identical to mean pooling.
    """
    n = x.value.shape[1]
    if alpha.value.shape != (batch * t_max, 1) or x.value.shape[0] != batch * t_max:
        raise DimensionError("segment_weighted_sum: alpha/x shapes disagree with batch layout")
    a3 = alpha.value.reshape(batch, t_max)
    x3 = x.value.reshape(batch, t_max, n)
    out = tape.out(np.einsum("bt,btn->bn", a3, x3))

    def bw(alpha=alpha, x=x, out=out, a3=a3, x3=x3, batch=batch, t_max=t_max, n=n):
        if out.grad is None:
            return
        g = out.grad
        if not x.const:
            x.accumulate((a3[:, :, None] * g[:, None, :]).reshape(batch * t_max, n))
        if not alpha.const:
            alpha.accumulate(np.einsum("btn,bn->bt", x3, g).reshape(batch * t_max, 1))

    tape.record(bw)
    return out


def segment_mean(tape: Tape, x: Node, mask: np.ndarray, batch: int, t_max: int) -> Node:
    """Masked mean over time, computed as a uniform-weight weighted sum."""
    return segment_weighted_sum(tape, uniform_alpha(tape, mask, batch, t_max), x, batch, t_max)


def segment_max(tape: Tape, x: Node, mask: np.ndarray, batch: int, t_max: int) -> Node:
    """Masked columnwise max over time; gradient routes to the argmax frame."""
    n = x.value.shape[1]
    m = _as_mask3(mask, batch, t_max)
    x3 = np.where(m[:, :, None], x.value.reshape(batch, t_max, n), -np.inf)
    idx = x3.argmax(axis=1)                  # B×n frame indices
    out = tape.out(np.take_along_axis(x3, idx[:, None, :], axis=1)[:, 0, :])

    def bw(x=x, out=out, idx=idx, batch=batch, t_max=t_max, n=n):
        if out.grad is None or x.const:
            return
        g = np.zeros((batch, t_max, n))
        np.put_along_axis(g, idx[:, None, :], out.grad[:, None, :], axis=1)
        x.accumulate(g.reshape(batch * t_max, n))

    tape.record(bw)
    return out


def additive_scores(tape: Tape, p: Node, q: Node, v: Node,
                    batch: int, t_a: int, t_t: int) -> Node:
    """Additive attention scores s[b,j,t] = v·tanh(p[b,t] + q[b,j]).

    p: (B*Ta)×d projected audio states, q: (B*Tt)×d projected tokens,
    v: d×1. Output is (B*Tt)×Ta, rows in token order. The tanh tensor is
    recomputed per batch item in backward instead of being stored.
    """
    d = p.value.shape[1]
    if q.value.shape[1] != d or v.value.shape != (d, 1):
        raise DimensionError("additive_scores: projection dims disagree")
    p3 = p.value.reshape(batch, t_a, d)
    q3 = q.value.reshape(batch, t_t, d)
    vv = v.value.ravel()
    s = np.empty((batch, t_t, t_a))
    for b in range(batch):
        s[b] = np.tanh(q3[b][:, None, :] + p3[b][None, :, :]) @ vv
    out = tape.out(s.reshape(batch * t_t, t_a))

    def bw(p=p, q=q, v=v, out=out, p3=p3, q3=q3, vv=vv,
           batch=batch, t_a=t_a, t_t=t_t, d=d):
        if out.grad is None:
            return
        g3 = out.grad.reshape(batch, t_t, t_a)
        dp = np.zeros((batch, t_a, d))
        dq = np.zeros((batch, t_t, d))
        dv = np.zeros(d)
        for b in range(batch):
            m = np.tanh(q3[b][:, None, :] + p3[b][None, :, :])   # Tt×Ta×d
            common = g3[b][:, :, None] * (1.0 - m * m) * vv
            dq[b] = common.sum(axis=1)
            dp[b] = common.sum(axis=0)
            dv += np.einsum("jt,jtd->d", g3[b], m)
        if not p.const:
            p.accumulate(dp.reshape(batch * t_a, d))
        if not q.const:
            q.accumulate(dq.reshape(batch * t_t, d))
        if not v.const:
            v.accumulate(dv.reshape(d, 1))

    tape.record(bw)
    return out


def rowwise_masked_softmax(tape: Tape, s: Node, valid: np.ndarray) -> Node:
    """Softmax along each row, restricted to ``valid`` columns (per row)."""
    valid = np.asarray(valid, dtype=bool)
    if valid.shape != s.value.shape:
        raise DimensionError("rowwise_masked_softmax: mask shape mismatch")
    if not valid.any(axis=1).all():
        raise DataError("every row needs at least one valid column")
    masked = np.where(valid, s.value, -np.inf)
    shifted = masked - masked.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    alpha = e / e.sum(axis=1, keepdims=True)
    out = tape.out(alpha)

    def bw(s=s, out=out, alpha=alpha):
        if out.grad is None or s.const:
            return
        dot = (out.grad * alpha).sum(axis=1, keepdims=True)
        s.accumulate(alpha * (out.grad - dot))

    tape.record(bw)
    return out


def segment_context(tape: Tape, alpha: Node, h: Node, batch: int, t_t: int, t_a: int) -> Node:
    """Per-token context vectors: block-diagonal matmul of alpha (B*Tt)×Ta with h (B*Ta)×d."""
    d = h.value.shape[1]
    a3 = alpha.value.reshape(batch, t_t, t_a)
    h3 = h.value.reshape(batch, t_a, d)
    out = tape.out((a3 @ h3).reshape(batch * t_t, d))

    def bw(alpha=alpha, h=h, out=out, a3=a3, h3=h3, batch=batch, t_t=t_t, t_a=t_a, d=d):
        if out.grad is None:
            return
        g3 = out.grad.reshape(batch, t_t, d)
        if not alpha.const:
            alpha.accumulate((g3 @ h3.transpose(0, 2, 1)).reshape(batch * t_t, t_a))
        if not h.const:
            h.accumulate((a3.transpose(0, 2, 1) @ g3).reshape(batch * t_a, d))

    tape.record(bw)
    return out
