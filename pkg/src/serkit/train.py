"""Training and evaluation: mini-batch loops, cross-validation, scaling runs.

Training always runs the full epoch budget (no early stopping of any
kind) and evaluates the final-epoch parameters. Each fold trains on four
sessions and tests on the held-out fifth; fold seeds are derived as
seed + fold_index so folds are independently reproducible.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data import (
    CLASS_TO_INDEX,
    MAX_CROP_S,
    NUM_CLASSES,
    crop_frames,
    embedding_path,
    make_folds,
    split_fold,
    subsample_balanced,
)
from .embio import read_container
from .errors import ConfigError, DataError
from .frames import SOURCE_DIMS
from .metrics import confusion_matrix, unweighted_accuracy, weighted_accuracy
from .models import (
    ModelSpec,
    build_batch,
    forward_logits,
    init_params,
    is_recurrent,
)
from .numcore import Tape, adam_step, backward, clip_gradients, softmax_xent

DEFAULT_BATCH_SIZE = 16
DEFAULT_LR = 1e-4
DEFAULT_EPOCHS = 100
DEFAULT_GRAD_CLIP = 5.0


@dataclass(frozen=True)
class TrainConfig:
    """Everything needed to reproduce a run, seeds included."""

    model: ModelSpec
    source_kind: str
    batch_size: int = DEFAULT_BATCH_SIZE
    lr: float = DEFAULT_LR
    epochs: int = DEFAULT_EPOCHS
    seed: int = 0
    per_class_limit: int = None
    grad_clip: float = DEFAULT_GRAD_CLIP
    num_workers: int = 1

    def __post_init__(self):
        if self.source_kind not in SOURCE_DIMS:
            raise ConfigError(f"unknown source_kind {self.source_kind!r}")
        if SOURCE_DIMS[self.source_kind] != self.model.input_dim:
            raise ConfigError(
                f"source_kind {self.source_kind!r} delivers "
                f"{SOURCE_DIMS[self.source_kind]}-dim frames but the model "
                f"expects input_dim {self.model.input_dim}")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.per_class_limit is not None and self.per_class_limit < 0:
            raise ConfigError("per_class_limit must be >= 0 when set")
        if self.num_workers < 1:
            raise ConfigError("num_workers must be >= 1")

    def to_dict(self) -> dict:
        spec = self.model
        return {
            "model": {
                "kind": spec.kind,
                "input_dim": spec.input_dim,
                "num_classes": spec.num_classes,
                "mlp_hidden": list(spec.mlp_hidden),
                "rnn_hidden": spec.rnn_hidden,
                "dropout_rate": spec.dropout_rate,
                "text_dim": spec.text_dim,
            },
            "source_kind": self.source_kind,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "epochs": self.epochs,
            "seed": self.seed,
            "per_class_limit": self.per_class_limit,
            "grad_clip": self.grad_clip,
            "num_workers": self.num_workers,
        }

    @classmethod
    def from_dict(cls, data: dict, allow_custom_dims: bool = False) -> "TrainConfig":
        model = dict(data["model"])
        model["mlp_hidden"] = tuple(model.get("mlp_hidden", ()))
        spec = ModelSpec(allow_custom_dims=allow_custom_dims, **model)
        rest = {k: v for k, v in data.items() if k != "model"}
        return cls(model=spec, **rest)


# ---------------------------------------------------------------- embeddings

class EmbeddingStore:
    """Reads EMB1 containers from <root>/<kind>/<id>.emb1 with a cache.

    Acoustic sequences are cropped to the training duration limit on
    load; token sequences (bert) pass through uncropped.
    """

    def __init__(self, root, source_kind: str, crop_s: float = MAX_CROP_S):
        if source_kind not in SOURCE_DIMS:
            raise ConfigError(f"unknown source_kind {source_kind!r}")
        self.root = root
        self.source_kind = source_kind
        self.crop_s = None if source_kind == "bert" else crop_s
        self._cache = {}

    def get(self, utt_id: str):
        cached = self._cache.get(utt_id)
        if cached is not None:
            return cached
        path = embedding_path(self.root, self.source_kind, utt_id)
        try:
            seq = read_container(path)
        except FileNotFoundError:
            raise DataError(f"missing embedding for utterance {utt_id!r} "
                            f"(expected {path})")
        if seq.source_kind != self.source_kind:
            raise DataError(f"{path}: container holds {seq.source_kind!r} "
                            f"frames, store expected {self.source_kind!r}")
        if self.crop_s is not None:
            seq = crop_frames(seq, self.crop_s)
        self._cache[utt_id] = seq
        return seq


class InMemoryEmbeddings:
    """Dict-backed store, mostly for tests and tiny experiments."""

    def __init__(self, mapping: dict):
        self._mapping = dict(mapping)

    def get(self, utt_id: str):
        try:
            return self._mapping[utt_id]
        except KeyError:
            raise DataError(f"missing embedding for utterance {utt_id!r}")


def _gather(records, audio_store, text_store):
    audio = [audio_store.get(r.id) for r in records]
    text = [text_store.get(r.id) for r in records] if text_store else None
    labels = np.array([CLASS_TO_INDEX[r.label] for r in records],
                      dtype=np.int64)
    return audio, text, labels


def _needs_text(spec: ModelSpec) -> bool:
    return spec.kind == "bimodal_align"


# ---------------------------------------------------------------- training

def train_one(records, config: TrainConfig, audio_store,
              text_store=None, seed: int = None):
    """Train one model on ``records``; returns (params, per-batch loss trace).

    Runs exactly ``config.epochs`` epochs of seeded shuffled mini-batches
    and returns the final-epoch parameters; there is no early stopping
    and no best-epoch selection.
    """
    if not records:
        raise DataError("cannot train on an empty record list")
    if _needs_text(config.model) and text_store is None:
        raise ConfigError("bimodal_align training requires a text store")
    seed = config.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    params = init_params(config.model, seed)
    audio, text, labels = _gather(records, audio_store, text_store)
    trace = []
    clip = is_recurrent(config.model)
    for _ in range(config.epochs):
        order = rng.permutation(len(records))
        for start in range(0, len(records), config.batch_size):
            chosen = order[start : start + config.batch_size]
            batch = build_batch(
                [audio[i] for i in chosen],
                labels=labels[chosen],
                text_seqs=[text[i] for i in chosen] if text else None)
            tape = Tape()
            logits = forward_logits(tape, params, config.model, batch,
                                    training=True, rng=rng)
            loss, _ = softmax_xent(tape, logits, batch.labels)
            backward(tape, loss)
            if clip:
                clip_gradients(params, config.grad_clip)
            adam_step(params, config.lr)
            trace.append(float(loss.value[0, 0]))
    return params, trace


def predict(params, spec: ModelSpec, records, audio_store, text_store=None,
            batch_size: int = 64) -> np.ndarray:
    """Predicted class indices for ``records``, batched inference."""
    if _needs_text(spec) and text_store is None:
        raise ConfigError("bimodal_align inference requires a text store")
    audio, text, _ = _gather(records, audio_store, text_store)
    out = np.empty(len(records), dtype=np.int64)
    for start in range(0, len(records), batch_size):
        stop = min(start + batch_size, len(records))
        batch = build_batch(
            audio[start:stop],
            text_seqs=text[start:stop] if text else None)
        logits = forward_logits(Tape(), params, spec, batch, training=False)
        out[start:stop] = logits.value.argmax(axis=1)
    return out


def evaluate(params, spec: ModelSpec, records, audio_store, text_store=None):
    """Confusion matrix, UA, and WA on ``records``."""
    if not records:
        raise DataError("cannot evaluate on an empty record list")
    y_pred = predict(params, spec, records, audio_store, text_store)
    y_true = np.array([CLASS_TO_INDEX[r.label] for r in records],
                      dtype=np.int64)
    confusion = confusion_matrix(y_true, y_pred, spec.num_classes)
    return confusion, unweighted_accuracy(confusion), weighted_accuracy(confusion)


# ---------------------------------------------------------------- reports

@dataclass
class FoldReport:
    fold_index: int
    test_session: int
    train_size: int
    test_size: int
    confusion: list
    ua: float
    wa: float
    loss_trace: list = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "fold_index": self.fold_index,
            "test_session": self.test_session,
            "train_size": self.train_size,
            "test_size": self.test_size,
            "confusion": self.confusion,
            "ua": self.ua,
            "wa": self.wa,
            "loss_trace": self.loss_trace,
        }


@dataclass
class RunReport:
    folds: list
    mean_ua: float
    mean_wa: float
    config: dict
    seed: int
    wall_time_s: float

    def to_dict(self) -> dict:
        return {
            "folds": [f.to_dict() for f in self.folds],
            "mean_ua": self.mean_ua,
            "mean_wa": self.mean_wa,
            "config": self.config,
            "seed": self.seed,
            "wall_time_s": self.wall_time_s,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        folds = [FoldReport(**f) for f in data["folds"]]
        return cls(folds=folds, mean_ua=data["mean_ua"],
                   mean_wa=data["mean_wa"], config=data["config"],
                   seed=data["seed"], wall_time_s=data["wall_time_s"])

    def fingerprint(self) -> dict:
        """Everything except execution details (wall time, worker count),
        for determinism comparisons: equal fingerprints mean equal results."""
        out = self.to_dict()
        out.pop("wall_time_s")
        out["config"] = dict(out["config"])
        out["config"].pop("num_workers", None)
        return out


# ---------------------------------------------------------------- cross-validation

def _run_fold(fold_index, fold, records, config, audio_store, text_store):
    train_records, test_records = split_fold(records, fold)
    train_ids = {r.id for r in train_records}
    test_ids = {r.id for r in test_records}
    if train_ids & test_ids:
        raise DataError(f"fold {fold_index}: train/test leakage "
                        f"({sorted(train_ids & test_ids)[:3]} ...)")
    fold_seed = config.seed + fold_index
    if config.per_class_limit is not None:
        train_records = subsample_balanced(train_records,
                                           config.per_class_limit,
                                           seed=fold_seed)
    params, trace = train_one(train_records, config, audio_store,
                              text_store, seed=fold_seed)
    confusion, ua, wa = evaluate(params, config.model, test_records,
                                 audio_store, text_store)
    return FoldReport(
        fold_index=fold_index,
        test_session=fold.test_session,
        train_size=len(train_records),
        test_size=len(test_records),
        confusion=confusion.tolist(),
        ua=ua,
        wa=wa,
        loss_trace=trace,
    )


def run_cv(records, config: TrainConfig, audio_store, text_store=None) -> RunReport:
    """Five speaker-independent folds; aggregate UA/WA are fold means."""
    started = time.perf_counter()
    plan = make_folds(records)
    jobs = list(enumerate(plan))
    if config.num_workers > 1:
        with ThreadPoolExecutor(max_workers=config.num_workers) as pool:
            folds = list(pool.map(
                lambda job: _run_fold(job[0], job[1], records, config,
                                      audio_store, text_store), jobs))
    else:
        folds = [_run_fold(i, fold, records, config, audio_store, text_store)
                 for i, fold in jobs]
    mean_ua = float(np.mean([f.ua for f in folds]))
    mean_wa = float(np.mean([f.wa for f in folds]))
    return RunReport(folds=folds, mean_ua=mean_ua, mean_wa=mean_wa,
                     config=config.to_dict(), seed=config.seed,
                     wall_time_s=time.perf_counter() - started)


@dataclass
class ScalePoint:
    size: int
    report: RunReport


def run_scaling_curve(records, config: TrainConfig, sizes,
                      audio_store, text_store=None) -> list:
    """One cross-validation run per training-set size.

    Sizes are total balanced training counts (so they must be multiples
    of the class count); per_class_limit = size / num_classes. Same-seed
    selections are nested across sizes, so successive curve points
    differ only by added training data.
    """
    sizes = list(sizes)
    if not sizes or sorted(sizes) != sizes:
        raise ConfigError("sizes must be a non-empty ascending list")
    points = []
    for size in sizes:
        if size <= 0 or size % NUM_CLASSES != 0:
            raise ConfigError(f"size {size} is not a positive multiple "
                              f"of {NUM_CLASSES}")
        sized = replace(config, per_class_limit=size // NUM_CLASSES)
        points.append(ScalePoint(size=size,
                                 report=run_cv(records, sized,
                                               audio_store, text_store)))
    return points
