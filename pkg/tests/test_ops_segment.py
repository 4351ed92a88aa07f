"""Mask-aware pooling and attention ops in the flat (B*T)xN batch layout."""

import numpy as np
import pytest

from serkit import numcore as nc
from serkit.errors import DataError

from helpers import gradcheck_op


def _flat_batch(rng, batch, t_max, dim, lengths):
    x = rng.normal(size=(batch * t_max, dim))
    mask = np.zeros(batch * t_max, dtype=bool)
    for b, ln in enumerate(lengths):
        mask[b * t_max: b * t_max + ln] = True
        x[b * t_max + ln: (b + 1) * t_max] = 777.0  # padding junk must never leak
    return x, mask


def test_segment_mean_matches_per_sequence_numpy():
    rng = np.random.default_rng(0)
    batch, t_max, dim = 3, 5, 4
    lengths = [5, 2, 1]
    x, mask = _flat_batch(rng, batch, t_max, dim, lengths)
    tape = nc.Tape()
    out = nc.segment_mean(tape, nc.Node(x), mask, batch, t_max)
    for b, ln in enumerate(lengths):
        expected = x[b * t_max: b * t_max + ln].mean(axis=0)
        assert np.abs(out.value[b] - expected).max() < 1e-12


def test_segment_max_matches_per_sequence_numpy():
    rng = np.random.default_rng(1)
    batch, t_max, dim = 3, 6, 2
    lengths = [4, 6, 1]
    x, mask = _flat_batch(rng, batch, t_max, dim, lengths)
    x[mask] = rng.normal(size=(sum(lengths), dim)) - 5.0  # all-negative valid values
    tape = nc.Tape()
    out = nc.segment_max(tape, nc.Node(x), mask, batch, t_max)
    for b, ln in enumerate(lengths):
        expected = x[b * t_max: b * t_max + ln].max(axis=0)
        assert np.array_equal(out.value[b], expected)


def test_segment_softmax_sums_to_one_and_zeroes_padding():
    rng = np.random.default_rng(2)
    batch, t_max = 4, 7
    lengths = [7, 3, 1, 5]
    scores, mask = _flat_batch(rng, batch, t_max, 1, lengths)
    tape = nc.Tape()
    alpha = nc.segment_softmax(tape, nc.Node(scores), mask, batch, t_max)
    a = alpha.value.reshape(batch, t_max)
    for b, ln in enumerate(lengths):
        assert a[b, :ln].sum() == pytest.approx(1.0, abs=1e-12)
        assert np.array_equal(a[b, ln:], np.zeros(t_max - ln))


def test_segment_ops_require_one_valid_frame():
    with pytest.raises(DataError):
        nc.segment_mean(nc.Tape(), nc.Node(np.ones((4, 2))), np.zeros(4, dtype=bool), 2, 2)


def test_segment_gradchecks():
    rng = np.random.default_rng(3)
    batch, t_max, dim = 2, 4, 3
    lengths = [4, 2]
    _, mask = _flat_batch(rng, batch, t_max, dim, lengths)
    arrays = {
        "x": rng.normal(size=(batch * t_max, dim)),
        "scores": rng.normal(size=(batch * t_max, 1)),
    }

    def build(tape, nodes):
        alpha = nc.segment_softmax(tape, nodes["scores"], mask, batch, t_max)
        pooled = nc.segment_weighted_sum(tape, alpha, nodes["x"], batch, t_max)
        mx = nc.segment_max(tape, nodes["x"], mask, batch, t_max)
        mean = nc.segment_mean(tape, nodes["x"], mask, batch, t_max)
        both = nc.concat_cols(tape, [pooled, mx, mean])
        w = np.random.default_rng(0).normal(size=both.value.shape)
        return nc.reduce_sum(tape, nc.scale(tape, both, w))

    assert gradcheck_op(build, arrays) < 1e-4


def test_additive_scores_values_and_gradcheck():
    rng = np.random.default_rng(4)
    batch, t_a, t_t, d = 2, 3, 2, 4
    arrays = {
        "p": rng.normal(size=(batch * t_a, d)),
        "q": rng.normal(size=(batch * t_t, d)),
        "v": rng.normal(size=(d, 1)),
    }
    tape = nc.Tape()
    s = nc.additive_scores(tape, nc.Node(arrays["p"]), nc.Node(arrays["q"]),
                           nc.Node(arrays["v"]), batch, t_a, t_t)
    # direct evaluation of one entry
    b, j, t = 1, 0, 2
    expected = float(np.tanh(arrays["q"][b * t_t + j] + arrays["p"][b * t_a + t]) @ arrays["v"].ravel())
    assert s.value[b * t_t + j, t] == pytest.approx(expected, abs=1e-12)

    def build(tape, nodes):
        out = nc.additive_scores(tape, nodes["p"], nodes["q"], nodes["v"], batch, t_a, t_t)
        w = np.random.default_rng(1).normal(size=out.value.shape)
        return nc.reduce_sum(tape, nc.scale(tape, out, w))

    assert gradcheck_op(build, arrays) < 1e-4


def test_rowwise_masked_softmax_and_segment_context_gradcheck():
    rng = np.random.default_rng(5)
    batch, t_t, t_a, d = 2, 2, 3, 3
    valid = np.ones((batch * t_t, t_a), dtype=bool)
    valid[2:, 2] = False  # second sequence has only 2 valid audio frames
    arrays = {
        "s": rng.normal(size=(batch * t_t, t_a)),
        "h": rng.normal(size=(batch * t_a, d)),
    }

    tape = nc.Tape()
    alpha = nc.rowwise_masked_softmax(tape, nc.Node(arrays["s"]), valid)
    assert np.abs(alpha.value.sum(axis=1) - 1.0).max() < 1e-12
    assert np.array_equal(alpha.value[2:, 2], np.zeros(2))

    def build(tape, nodes):
        alpha = nc.rowwise_masked_softmax(tape, nodes["s"], valid)
        ctx = nc.segment_context(tape, alpha, nodes["h"], batch, t_t, t_a)
        w = np.random.default_rng(2).normal(size=ctx.value.shape)
        return nc.reduce_sum(tape, nc.scale(tape, ctx, w))

    assert gradcheck_op(build, arrays) < 1e-4
