"""Classifier heads over frame sequences.

Four acoustic heads (mean pooling, mean+max pooling, attention-weighted
pooling, shared per-frame MLP with mean pooling) plus a bimodal head that
aligns audio states to text tokens with additive attention between two
Bi-LSTMs. All of them consume padded batches in the flat b-major layout
of numcore's segment ops and emit one logit row per sequence.
"""

import json
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from . import numcore as nc
from .errors import (
    BadMagicError,
    ChecksumError,
    ConfigError,
    DataError,
    DimensionError,
    TruncatedError,
)
from .numcore import Node, ParamStore, Tape, glorot_uniform

MODEL_KINDS = ("mean_pool", "mean_max_pool", "attention_pool", "mlp_pool",
               "bimodal_align")
ACOUSTIC_DIMS = (34, 512)
TEXT_DIM = 768
NUM_CLASSES = 4
DEFAULT_DROPOUT = 0.2
DEFAULT_RNN_HIDDEN = 128

# Hidden widths chosen so the two per-frame MLPs have parameter counts
# within 10% of each other despite the 34- vs 512-dim inputs.
MLP_HIDDEN_DEFAULTS = {34: (416, 416), 512: (256, 256)}


@dataclass(frozen=True)
class ModelSpec:
    """Immutable description of one classifier head.

    ``allow_custom_dims`` drops the production dimension whitelist so toy
    instances (finite-difference checks, miniature examples) can use tiny
    inputs; everything structural is still validated.
    """

    kind: str
    input_dim: int
    num_classes: int = NUM_CLASSES
    mlp_hidden: tuple = ()
    rnn_hidden: int = DEFAULT_RNN_HIDDEN
    dropout_rate: float = DEFAULT_DROPOUT
    text_dim: int = TEXT_DIM
    allow_custom_dims: bool = False

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}; "
                              f"expected one of {MODEL_KINDS}")
        object.__setattr__(self, "mlp_hidden", tuple(self.mlp_hidden))
        if self.input_dim < 1 or self.num_classes < 2:
            raise ConfigError("input_dim must be >= 1 and num_classes >= 2")
        if self.rnn_hidden < 1:
            raise ConfigError("rnn_hidden must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0, 1), "
                              f"got {self.dropout_rate}")
        if (self.kind == "mlp_pool") != bool(self.mlp_hidden):
            raise ConfigError("mlp_hidden must be non-empty exactly when "
                              "kind is mlp_pool")
        if any(h < 1 for h in self.mlp_hidden):
            raise ConfigError("mlp_hidden widths must be positive")
        if not self.allow_custom_dims:
            if self.num_classes != NUM_CLASSES:
                raise ConfigError(f"num_classes is fixed at {NUM_CLASSES}")
            if self.kind == "bimodal_align":
                if self.input_dim != 512 or self.text_dim != TEXT_DIM:
                    raise ConfigError("bimodal_align expects 512-dim audio "
                                      "frames and 768-dim text tokens")
            elif self.input_dim not in ACOUSTIC_DIMS:
                raise ConfigError(f"input_dim must be one of {ACOUSTIC_DIMS}, "
                                  f"got {self.input_dim}")


def default_spec(kind: str, input_dim: int,
                 dropout_rate: float = DEFAULT_DROPOUT, **overrides) -> ModelSpec:
    """ModelSpec with the stock hidden widths filled in for mlp_pool."""
    if kind == "mlp_pool" and "mlp_hidden" not in overrides:
        if input_dim not in MLP_HIDDEN_DEFAULTS:
            raise ConfigError(f"no default mlp_hidden for input_dim {input_dim}")
        overrides["mlp_hidden"] = MLP_HIDDEN_DEFAULTS[input_dim]
    return ModelSpec(kind=kind, input_dim=input_dim,
                     dropout_rate=dropout_rate, **overrides)


# ---------------------------------------------------------------- batching

@dataclass
class PaddedBatch:
    """Variable-length sequences padded to a rectangle.

    values holds B sequences stacked in the flat b-major layout: row
    b * t_max + t is frame t of sequence b, zero rows past each length,
    with mask marking the real frames. Text fields are present only for
    bimodal batches.
    """

    values: np.ndarray
    mask: np.ndarray
    batch: int
    t_max: int
    labels: np.ndarray = None
    text_values: np.ndarray = None
    text_mask: np.ndarray = None
    text_t_max: int = 0

    @property
    def has_text(self) -> bool:
        return self.text_values is not None


def _pad_flat(arrays):
    batch = len(arrays)
    t_max = max(a.shape[0] for a in arrays)
    dim = arrays[0].shape[1]
    values = np.zeros((batch * t_max, dim))
    mask = np.zeros(batch * t_max, dtype=bool)
    for b, a in enumerate(arrays):
        if a.shape[1] != dim:
            raise DimensionError(f"sequence {b} has dim {a.shape[1]}, "
                                 f"expected {dim}")
        values[b * t_max : b * t_max + a.shape[0]] = a
        mask[b * t_max : b * t_max + a.shape[0]] = True
    return values, mask, batch, t_max


def build_batch(seqs, labels=None, text_seqs=None) -> PaddedBatch:
    """Pad a list of frame matrices (and optionally token matrices) into
    one batch. ``seqs`` items may be FrameSequence objects or raw T×n
    arrays; labels become an int vector aligned with the batch order."""
    if not seqs:
        raise DataError("cannot build a batch from zero sequences")
    arrays = [np.asarray(getattr(s, "frames", s), dtype=np.float64) for s in seqs]
    values, mask, batch, t_max = _pad_flat(arrays)
    out = PaddedBatch(values=values, mask=mask, batch=batch, t_max=t_max)
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (batch,):
            raise DimensionError(f"labels shape {labels.shape} != ({batch},)")
        out.labels = labels
    if text_seqs is not None:
        if len(text_seqs) != batch:
            raise DataError(f"{len(text_seqs)} text sequences for "
                            f"{batch} audio sequences")
        t_arrays = [np.asarray(getattr(s, "frames", s), dtype=np.float64)
                    for s in text_seqs]
        out.text_values, out.text_mask, _, out.text_t_max = _pad_flat(t_arrays)
    return out


# ---------------------------------------------------------------- parameters

def _add_glorot(store: ParamStore, rng, name: str, rows: int, cols: int):
    store.add(name, glorot_uniform(rng, rows, cols))


def _add_lstm(store: ParamStore, rng, prefix: str, in_dim: int, hidden: int):
    _add_glorot(store, rng, prefix + "_wx", in_dim, 4 * hidden)
    _add_glorot(store, rng, prefix + "_wh", hidden, 4 * hidden)
    bias = np.zeros((1, 4 * hidden))
    bias[0, hidden : 2 * hidden] = 1.0    # open forget gates at init
    store.add(prefix + "_b", bias)


def init_params(spec: ModelSpec, seed: int) -> ParamStore:
    """Fresh parameters for a head: Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    store = ParamStore()
    n, k = spec.input_dim, spec.num_classes
    if spec.kind == "mean_pool":
        _add_glorot(store, rng, "cls_w", n, k)
        store.add("cls_b", np.zeros((1, k)))
    elif spec.kind == "mean_max_pool":
        _add_glorot(store, rng, "cls_w", 2 * n, k)
        store.add("cls_b", np.zeros((1, k)))
    elif spec.kind == "attention_pool":
        _add_glorot(store, rng, "attn_w", n, 1)
        store.add("attn_b", np.zeros((1, 1)))
        _add_glorot(store, rng, "cls_w", n, k)
        store.add("cls_b", np.zeros((1, k)))
    elif spec.kind == "mlp_pool":
        width_in = n
        for i, width in enumerate(spec.mlp_hidden):
            _add_glorot(store, rng, f"mlp{i}_w", width_in, width)
            store.add(f"mlp{i}_b", np.zeros((1, width)))
            width_in = width
        _add_glorot(store, rng, "cls_w", width_in, k)
        store.add("cls_b", np.zeros((1, k)))
    else:  # bimodal_align
        h = spec.rnn_hidden
        _add_lstm(store, rng, "audio_fwd", n, h)
        _add_lstm(store, rng, "audio_bwd", n, h)
        _add_glorot(store, rng, "attn_p", 2 * h, h)
        _add_glorot(store, rng, "attn_q", spec.text_dim, h)
        _add_glorot(store, rng, "attn_v", h, 1)
        _add_lstm(store, rng, "fused_fwd", spec.text_dim + 2 * h, h)
        _add_lstm(store, rng, "fused_bwd", spec.text_dim + 2 * h, h)
        _add_glorot(store, rng, "cls_w", 2 * h, k)
        store.add("cls_b", np.zeros((1, k)))
    return store


def is_recurrent(spec: ModelSpec) -> bool:
    """Recurrent heads get gradient-norm clipping during training."""
    return spec.kind == "bimodal_align"


# ---------------------------------------------------------------- forward

def _dropout(tape, x, spec, training, rng):
    if training and spec.dropout_rate > 0.0:
        if rng is None:
            raise ConfigError("training-mode forward needs an rng for dropout")
        return nc.dropout_forward(tape, x, spec.dropout_rate, True, rng)
    return x


def _classify(tape, store, pooled):
    return nc.dense_forward(tape, pooled, tape.param(store, "cls_w"),
                            tape.param(store, "cls_b"))


def _lstm_direction(tape, store, prefix, steps, mask2, hidden, reverse):
    """Run one LSTM direction over per-timestep nodes with masked state
    updates: padded steps leave h and c untouched, so the backward
    direction is not polluted by trailing padding."""
    batch = steps[0].value.shape[0]
    w_x = tape.param(store, prefix + "_wx")
    w_h = tape.param(store, prefix + "_wh")
    b = tape.param(store, prefix + "_b")
    h = tape.const(np.zeros((batch, hidden)))
    c = tape.const(np.zeros((batch, hidden)))
    order = range(len(steps) - 1, -1, -1) if reverse else range(len(steps))
    outs = [None] * len(steps)
    for t in order:
        h_new, c_new = nc.lstm_cell_forward(tape, steps[t], h, c, w_x, w_h, b)
        col = mask2[:, t].astype(np.float64)[:, None]
        keep = tape.const(np.repeat(col, hidden, axis=1))
        drop = tape.const(np.repeat(1.0 - col, hidden, axis=1))
        h = nc.add(tape, nc.mul(tape, h_new, keep), nc.mul(tape, h, drop))
        c = nc.add(tape, nc.mul(tape, c_new, keep), nc.mul(tape, c, drop))
        outs[t] = h
    return outs


def _bi_lstm(tape, store, prefix, x: Node, mask, batch, t_max, hidden) -> Node:
    """Bidirectional LSTM over a flat (B*T)×d node -> (B*T)×2H states."""
    mask2 = np.asarray(mask, dtype=bool).reshape(batch, t_max)
    steps = nc.unstack_time(tape, x, batch, t_max)
    fwd = _lstm_direction(tape, store, prefix + "_fwd", steps, mask2,
                          hidden, reverse=False)
    bwd = _lstm_direction(tape, store, prefix + "_bwd", steps, mask2,
                          hidden, reverse=True)
    both = [nc.concat_cols(tape, [f, r]) for f, r in zip(fwd, bwd)]
    return nc.stack_time(tape, both, batch)


def forward_logits(tape: Tape, store: ParamStore, spec: ModelSpec,
                   batch: PaddedBatch, training: bool = False,
                   rng: np.random.Generator = None, probe: dict = None) -> Node:
    """Logits node (B×K) for one padded batch under the given head.

    When ``probe`` is a dict, the bimodal head copies its attention
    internals into it (alpha, audio_states, context) for inspection.
    """
    x = tape.const(batch.values)
    b, t = batch.batch, batch.t_max

    if spec.kind == "mean_pool":
        alpha = nc.uniform_alpha(tape, batch.mask, b, t)
        pooled = nc.segment_weighted_sum(tape, alpha, x, b, t)
        pooled = _dropout(tape, pooled, spec, training, rng)
        return _classify(tape, store, pooled)

    if spec.kind == "mean_max_pool":
        alpha = nc.uniform_alpha(tape, batch.mask, b, t)
        mean = nc.segment_weighted_sum(tape, alpha, x, b, t)
        peak = nc.segment_max(tape, x, batch.mask, b, t)
        pooled = nc.concat_cols(tape, [mean, peak])
        pooled = _dropout(tape, pooled, spec, training, rng)
        return _classify(tape, store, pooled)

    if spec.kind == "attention_pool":
        scores = nc.dense_forward(tape, x, tape.param(store, "attn_w"),
                                  tape.param(store, "attn_b"))
        alpha = nc.segment_softmax(tape, scores, batch.mask, b, t)
        pooled = nc.segment_weighted_sum(tape, alpha, x, b, t)
        pooled = _dropout(tape, pooled, spec, training, rng)
        return _classify(tape, store, pooled)

    if spec.kind == "mlp_pool":
        hidden = x
        for i in range(len(spec.mlp_hidden)):
            hidden = nc.dense_forward(tape, hidden,
                                      tape.param(store, f"mlp{i}_w"),
                                      tape.param(store, f"mlp{i}_b"))
            hidden = nc.relu_forward(tape, hidden)
            hidden = _dropout(tape, hidden, spec, training, rng)
        pooled = nc.segment_mean(tape, hidden, batch.mask, b, t)
        return _classify(tape, store, pooled)

    # bimodal_align
    if not batch.has_text:
        raise DataError("bimodal_align requires text token sequences "
                        "alongside the audio batch")
    t_a, t_t = batch.t_max, batch.text_t_max
    h_audio = _bi_lstm(tape, store, "audio", x, batch.mask, b, t_a,
                       spec.rnn_hidden)
    h_audio = _dropout(tape, h_audio, spec, training, rng)
    tokens = tape.const(batch.text_values)
    p = nc.matmul(tape, h_audio, tape.param(store, "attn_p"))
    q = nc.matmul(tape, tokens, tape.param(store, "attn_q"))
    scores = nc.additive_scores(tape, p, q, tape.param(store, "attn_v"),
                                b, t_a, t_t)
    audio_mask2 = np.asarray(batch.mask, dtype=bool).reshape(b, t_a)
    valid = np.repeat(audio_mask2[:, None, :], t_t, axis=1).reshape(b * t_t, t_a)
    alpha = nc.rowwise_masked_softmax(tape, scores, valid)
    context = nc.segment_context(tape, alpha, h_audio, b, t_t, t_a)
    if probe is not None:
        probe["alpha"] = alpha.value.copy()
        probe["audio_states"] = h_audio.value.copy()
        probe["context"] = context.value.copy()
    fused = nc.concat_cols(tape, [tokens, context])
    h_fused = _bi_lstm(tape, store, "fused", fused, batch.text_mask, b, t_t,
                       spec.rnn_hidden)
    h_fused = _dropout(tape, h_fused, spec, training, rng)
    pooled = nc.segment_mean(tape, h_fused, batch.text_mask, b, t_t)
    return _classify(tape, store, pooled)


def forward_single(store: ParamStore, spec: ModelSpec, seq,
                   text_seq=None) -> np.ndarray:
    """Inference logits for one sequence, returned as a length-K vector."""
    text = [text_seq] if text_seq is not None else None
    batch = build_batch([seq], text_seqs=text)
    tape = Tape()
    logits = forward_logits(tape, store, spec, batch, training=False)
    return logits.value[0].copy()


# ---------------------------------------------------------------- checkpoints

CKPT_MAGIC = b"SKPT"
CKPT_VERSION = 1
_CKPT_HEAD = struct.Struct("<4sHI")

_SPEC_FIELDS = ("kind", "input_dim", "num_classes", "mlp_hidden",
                "rnn_hidden", "dropout_rate", "text_dim")


def _spec_meta(spec: ModelSpec) -> dict:
    meta = {name: getattr(spec, name) for name in _SPEC_FIELDS}
    meta["mlp_hidden"] = list(spec.mlp_hidden)
    return meta


def save_checkpoint(path, store: ParamStore, spec: ModelSpec) -> None:
    """Write parameters as named f64 slots with a CRC over the payload."""
    slots = [{"name": name, "shape": list(store[name].value.shape)}
             for name in store.names()]
    header = json.dumps({"spec": _spec_meta(spec), "slots": slots,
                         "step_count": store.step_count}).encode("utf-8")
    payload = b"".join(
        np.ascontiguousarray(store[name].value, dtype="<f8").tobytes()
        for name in store.names())
    with open(path, "wb") as fh:
        fh.write(_CKPT_HEAD.pack(CKPT_MAGIC, CKPT_VERSION, len(header)))
        fh.write(header)
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


def load_checkpoint(path, spec: ModelSpec) -> ParamStore:
    """Read a checkpoint back, validating spec compatibility, slot shapes
    against a freshly initialized store, and the payload CRC."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _CKPT_HEAD.size:
        raise TruncatedError(f"{path}: shorter than the checkpoint header")
    magic, version, header_len = _CKPT_HEAD.unpack_from(blob)
    if magic != CKPT_MAGIC:
        raise BadMagicError(f"{path}: not a parameter checkpoint")
    if version != CKPT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    header_end = _CKPT_HEAD.size + header_len
    if len(blob) < header_end + 4:
        raise TruncatedError(f"{path}: truncated checkpoint header")
    meta = json.loads(blob[_CKPT_HEAD.size:header_end].decode("utf-8"))
    saved_spec = dict(meta["spec"])
    saved_spec["mlp_hidden"] = tuple(saved_spec.get("mlp_hidden", ()))
    wanted = _spec_meta(spec)
    wanted["mlp_hidden"] = tuple(wanted["mlp_hidden"])
    if saved_spec != wanted:
        raise ConfigError(f"{path}: checkpoint was saved for spec "
                          f"{saved_spec}, requested {wanted}")
    reference = init_params(spec, seed=0)
    names = reference.names()
    if [s["name"] for s in meta["slots"]] != names:
        raise DataError(f"{path}: slot names disagree with the model spec")
    payload_len = sum(int(np.prod(s["shape"])) for s in meta["slots"]) * 8
    expected = header_end + payload_len + 4
    if len(blob) != expected:
        raise TruncatedError(f"{path}: {len(blob)} bytes, expected {expected}")
    payload = blob[header_end:header_end + payload_len]
    (stored_crc,) = struct.unpack("<I", blob[header_end + payload_len:])
    if stored_crc != zlib.crc32(payload):
        raise ChecksumError(f"{path}: checkpoint payload CRC mismatch")
    store = ParamStore()
    store.step_count = int(meta.get("step_count", 0))
    offset = 0
    for slot_meta in meta["slots"]:
        shape = tuple(slot_meta["shape"])
        if shape != reference[slot_meta["name"]].value.shape:
            raise DataError(f"{path}: slot {slot_meta['name']!r} has shape "
                            f"{shape}, spec requires "
                            f"{reference[slot_meta['name']].value.shape}")
        count = int(np.prod(shape))
        values = np.frombuffer(payload, dtype="<f8", count=count,
                               offset=offset).reshape(shape)
        store.add(slot_meta["name"], values.astype(np.float64))
        offset += count * 8
    return store
