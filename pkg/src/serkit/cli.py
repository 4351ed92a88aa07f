"""Command-line surface: extraction, training runs, scaling curves, utilities.

Every run writes a config snapshot (seed included) next to its outputs;
re-running with the snapshot's settings reproduces the aggregate numbers
bit-for-bit in single-threaded mode. Plot emission is CSV only; rendering
is left to external tools.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

from .audio import load_wav
from .data import CLASSES, SESSIONS, embedding_path, load_manifest
from .embio import read_container, read_header, write_container
from .errors import ConfigError, SerkitError
from .frames import SOURCE_LLD
from .lld import extract_lld
from .models import MODEL_KINDS, default_spec
from .synth import make_synthetic_dataset
from .train import EmbeddingStore, TrainConfig, run_cv, run_scaling_curve

# --set keys routed to ModelSpec vs TrainConfig, with their parsers.
_MODEL_KEYS = {
    "mlp_hidden": lambda s: tuple(int(v) for v in s.split(",") if v),
    "rnn_hidden": int,
    "dropout_rate": float,
    "num_classes": int,
    "text_dim": int,
}
_TRAIN_KEYS = {
    "batch_size": int,
    "lr": float,
    "epochs": int,
    "seed": int,
    "per_class_limit": int,
    "grad_clip": float,
    "num_workers": int,
}


def _parse_overrides(pairs):
    """Split --set key=value pairs into model/train override dicts.

    Unknown keys are rejected here, before any data is touched.
    """
    model, train = {}, {}
    for pair in pairs or []:
        key, sep, raw = pair.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        if key in _MODEL_KEYS:
            model[key] = _MODEL_KEYS[key](raw)
        elif key in _TRAIN_KEYS:
            train[key] = _TRAIN_KEYS[key](raw)
        else:
            known = sorted(_MODEL_KEYS) + sorted(_TRAIN_KEYS)
            raise ConfigError(f"unknown --set key {key!r} "
                              f"(known: {', '.join(known)})")
    return model, train


def _build_config(args) -> TrainConfig:
    model_over, train_over = _parse_overrides(args.set)
    if args.dropout is not None:
        model_over.setdefault("dropout_rate", args.dropout)
    if args.model == "bimodal_align":
        input_dim = 512
        if args.features != "wav2vec":
            raise ConfigError("bimodal_align uses wav2vec acoustic frames; "
                              "pass --features wav2vec")
    else:
        input_dim = {"lld": 34, "wav2vec": 512}[args.features]
    spec = default_spec(args.model, input_dim, **model_over)
    if args.per_class is not None:
        train_over.setdefault("per_class_limit", args.per_class)
    if args.epochs is not None:
        train_over.setdefault("epochs", args.epochs)
    if args.seed is not None:
        train_over.setdefault("seed", args.seed)
    return TrainConfig(model=spec, source_kind=args.features, **train_over)


def _check_embeddings(records, root, kind):
    """Fail before any training if required containers are absent."""
    missing = [r.id for r in records
               if not embedding_path(root, kind, r.id).exists()]
    if missing:
        shown = ", ".join(missing[:5])
        raise ConfigError(f"{len(missing)} utterance(s) lack {kind} "
                          f"embeddings under {root} (first: {shown})")


def _write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_confusion_csv(path: Path, confusion):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\pred", *CLASSES])
        for name, row in zip(CLASSES, confusion):
            writer.writerow([name, *row])


def _write_trace_csv(path: Path, folds):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fold", "step", "loss"])
        for fold in folds:
            for step, loss in enumerate(fold.loss_trace):
                writer.writerow([fold.fold_index, step, repr(loss)])


def _print_report(report, config: TrainConfig):
    print(f"model={config.model.kind} features={config.source_kind} "
          f"seed={config.seed}")
    print("fold  session  train  test      UA      WA")
    for fold in report.folds:
        print(f"{fold.fold_index:>4}  {fold.test_session:>7}  "
              f"{fold.train_size:>5}  {fold.test_size:>4}  "
              f"{fold.ua:6.4f}  {fold.wa:6.4f}")
    print(f"mean{'':>29}  {report.mean_ua:6.4f}  {report.mean_wa:6.4f}")


# ---------------------------------------------------------------- subcommands

def cmd_extract_lld(args) -> int:
    report = load_manifest(args.manifest)
    out_root = Path(args.out)
    written, failures = [], []
    for record in report.records:
        try:
            clip = load_wav(record.audio_path)
            seq = extract_lld(clip)
        except (SerkitError, OSError) as exc:
            failures.append({"id": record.id, "error": str(exc)})
            continue
        path = embedding_path(out_root, SOURCE_LLD, record.id)
        path.parent.mkdir(parents=True, exist_ok=True)
        write_container(path, seq)
        written.append(record.id)
    summary = {
        "manifest": str(args.manifest),
        "out": str(out_root),
        "written": len(written),
        "failures": failures,
        "skipped_labels": dict(report.skipped),
    }
    _write_json(out_root / "extract_summary.json", summary)
    print(f"wrote {len(written)} lld container(s), "
          f"{len(failures)} failure(s)")
    for failure in failures:
        print(f"  failed {failure['id']}: {failure['error']}",
              file=sys.stderr)
    return 1 if failures else 0


def _snapshot(args, config: TrainConfig, extra=None) -> dict:
    snap = {
        "command": args.command,
        "manifest": str(args.manifest),
        "emb_root": str(args.emb_root),
        "train_config": config.to_dict(),
    }
    if extra:
        snap.update(extra)
    return snap


def cmd_train_cv(args) -> int:
    config = _build_config(args)
    records = load_manifest(args.manifest).records
    emb_root = Path(args.emb_root)
    _check_embeddings(records, emb_root, config.source_kind)
    audio_store = EmbeddingStore(emb_root, config.source_kind)
    text_store = None
    if config.model.kind == "bimodal_align":
        _check_embeddings(records, emb_root, "bert")
        text_store = EmbeddingStore(emb_root, "bert")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", _snapshot(args, config))
    report = run_cv(records, config, audio_store, text_store)
    _write_json(out / "report.json", report.to_dict())
    for fold in report.folds:
        _write_confusion_csv(out / f"confusion_fold{fold.fold_index}.csv",
                             fold.confusion)
    _write_trace_csv(out / "loss_trace.csv", report.folds)
    _print_report(report, config)
    return 0


def cmd_scaling(args) -> int:
    config = _build_config(args)
    try:
        sizes = [int(v) for v in args.sizes.split(",") if v]
    except ValueError:
        raise ConfigError(f"--sizes expects comma-separated integers, "
                          f"got {args.sizes!r}")
    records = load_manifest(args.manifest).records
    emb_root = Path(args.emb_root)
    _check_embeddings(records, emb_root, config.source_kind)
    audio_store = EmbeddingStore(emb_root, config.source_kind)
    text_store = None
    if config.model.kind == "bimodal_align":
        _check_embeddings(records, emb_root, "bert")
        text_store = EmbeddingStore(emb_root, "bert")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json",
                _snapshot(args, config, {"sizes": sizes}))
    points = run_scaling_curve(records, config, sizes, audio_store, text_store)
    # Fixed header: size, mean UA, then one UA column per fold in order.
    with open(out / "scaling.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["size", "mean_ua",
                         *(f"fold{i}_ua" for i in range(len(SESSIONS)))])
        for point in points:
            writer.writerow([point.size, repr(point.report.mean_ua),
                             *(repr(f.ua) for f in point.report.folds)])
    _write_json(out / "scaling_report.json",
                {"points": [{"size": p.size, "report": p.report.to_dict()}
                            for p in points]})
    for point in points:
        print(f"size {point.size:>6}: mean UA {point.report.mean_ua:6.4f}")
    return 0


def cmd_inspect_emb(args) -> int:
    header = read_header(args.path)
    for key in ("version", "source_kind", "rows", "cols", "frame_hop_ms"):
        print(f"{key}: {header[key]}")
    try:
        read_container(args.path)
    except SerkitError as exc:
        print(f"payload: CORRUPT ({exc})", file=sys.stderr)
        return 1
    print("payload: OK")
    return 0


def cmd_make_synthetic(args) -> int:
    manifest = make_synthetic_dataset(
        Path(args.out), args.features, args.per_class,
        seed=args.seed if args.seed is not None else 0,
        separation=args.separation, t_range=(args.t_min, args.t_max))
    print(f"wrote {manifest}")
    return 0


# ---------------------------------------------------------------- parser

def _add_train_flags(sub):
    sub.add_argument("--manifest", required=True)
    sub.add_argument("--emb-root", required=True)
    sub.add_argument("--out", required=True)
    sub.add_argument("--model", default="mean_pool", choices=MODEL_KINDS)
    sub.add_argument("--features", default="lld", choices=("lld", "wav2vec"))
    sub.add_argument("--per-class", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--epochs", type=int, default=None)
    sub.add_argument("--dropout", type=float, default=None)
    sub.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override a model or training field")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="serkit",
        description="Speech emotion recognition experiments over frame "
                    "embeddings")
    subs = parser.add_subparsers(dest="command", required=True)

    extract = subs.add_parser(
        "extract-lld", help="compute acoustic features for every utterance")
    extract.add_argument("--manifest", required=True)
    extract.add_argument("--out", required=True,
                         help="embedding root; files land in <out>/lld/")
    extract.set_defaults(func=cmd_extract_lld)

    train = subs.add_parser(
        "train-cv", help="run five-fold speaker-independent training")
    _add_train_flags(train)
    train.set_defaults(func=cmd_train_cv)

    scaling = subs.add_parser(
        "scaling", help="training-set size sweep, one cross-validation per size")
    _add_train_flags(scaling)
    scaling.add_argument("--sizes", required=True,
                         help="comma-separated balanced training sizes")
    scaling.set_defaults(func=cmd_scaling)

    inspect = subs.add_parser(
        "inspect-emb", help="print an embedding container's header")
    inspect.add_argument("path")
    inspect.set_defaults(func=cmd_inspect_emb)

    synth = subs.add_parser(
        "make-synthetic", help="generate a labeled synthetic dataset")
    synth.add_argument("--out", required=True)
    synth.add_argument("--features", default="lld",
                       choices=("lld", "wav2vec"))
    synth.add_argument("--per-class", type=int, required=True)
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument("--separation", type=float, default=6.0)
    synth.add_argument("--t-min", type=int, default=20)
    synth.add_argument("--t-max", type=int, default=100)
    synth.set_defaults(func=cmd_make_synthetic)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SerkitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
