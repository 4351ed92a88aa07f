"""Minimal differentiable-compute core: tape, ops, parameters, Adam."""

from .ops import (
    add,
    additive_scores,
    concat_cols,
    dense_forward,
    dropout_forward,
    lstm_cell_forward,
    matmul,
    mul,
    reduce_sum,
    relu_forward,
    rowwise_masked_softmax,
    scale,
    segment_context,
    segment_max,
    segment_mean,
    segment_softmax,
    segment_weighted_sum,
    sigmoid_forward,
    slice_cols,
    softmax_xent,
    stack_time,
    tanh_forward,
    uniform_alpha,
    unstack_time,
)
from .params import (
    ParamStore,
    Slot,
    adam_step,
    clip_gradients,
    global_grad_norm,
    glorot_uniform,
)
from .tape import Node, Tape, backward, debug_checks_enabled, set_debug_checks

__all__ = [
    "Node", "Tape", "backward", "set_debug_checks", "debug_checks_enabled",
    "ParamStore", "Slot", "adam_step", "clip_gradients", "global_grad_norm",
    "glorot_uniform",
    "add", "additive_scores", "concat_cols", "dense_forward", "dropout_forward",
    "lstm_cell_forward", "matmul", "mul", "reduce_sum", "relu_forward",
    "rowwise_masked_softmax", "scale", "segment_context", "segment_max",
    "segment_mean", "segment_softmax", "segment_weighted_sum", "sigmoid_forward",
    "slice_cols", "softmax_xent", "stack_time", "tanh_forward", "uniform_alpha",
    "unstack_time",
]
