"""Manifest loading, label mapping, cropping, fold planning, subsampling.

The manifest is the only ingestion path: JSON-lines, one utterance per
line, fields {id, session, speaker, label_raw, audio, transcript,
duration_s}. Raw emotion labels are folded into four classes, with
excitement merged into happy; anything else is excluded and counted.
"""

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .frames import FrameSequence

CLASSES = ("neutral", "happy", "sad", "angry")
CLASS_TO_INDEX = {label: i for i, label in enumerate(CLASSES)}
NUM_CLASSES = len(CLASSES)
SESSIONS = (1, 2, 3, 4, 5)

RAW_LABEL_MAP = {
    "neu": "neutral", "neutral": "neutral",
    "hap": "happy", "happy": "happy", "happiness": "happy",
    "exc": "happy", "excited": "happy", "excitement": "happy",
    "sad": "sad", "sadness": "sad",
    "ang": "angry", "anger": "angry", "angry": "angry",
}

MAX_CROP_S = 5.0


@dataclass(frozen=True)
class UtteranceRecord:
    id: str
    session: int
    speaker: str
    label: str
    audio_path: str
    transcript: str
    duration_s: float

    @property
    def label_index(self) -> int:
        return CLASS_TO_INDEX[self.label]


@dataclass
class LoadReport:
    records: list
    skipped: Counter

    def __len__(self) -> int:
        return len(self.records)


_REQUIRED_FIELDS = ("id", "session", "speaker", "label_raw", "audio",
                    "transcript", "duration_s")


def load_manifest(path) -> LoadReport:
    """Parse a JSON-lines manifest into validated records.

    Records whose raw label has no 4-class mapping are dropped and
    tallied in the report; structural problems are hard errors that
    name the offending line.
    """
    records = []
    skipped = Counter()
    seen_ids = set()
    base = Path(path).parent
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno}: invalid JSON ({exc.msg})")
            if not isinstance(row, dict):
                raise DataError(f"{path}: line {lineno}: expected an object")
            for field in _REQUIRED_FIELDS:
                if field not in row:
                    raise DataError(f"{path}: line {lineno}: missing field {field!r}")
            utt_id = row["id"]
            if not isinstance(utt_id, str) or not utt_id:
                raise DataError(f"{path}: line {lineno}: id must be a non-empty string")
            if utt_id in seen_ids:
                raise DataError(f"{path}: line {lineno}: duplicate id {utt_id!r}")
            seen_ids.add(utt_id)
            session = row["session"]
            if not isinstance(session, int) or session not in SESSIONS:
                raise DataError(f"{path}: line {lineno}: session must be an "
                                f"integer in 1..5, got {session!r}")
            duration = row["duration_s"]
            if not isinstance(duration, (int, float)) or duration < 0:
                raise DataError(f"{path}: line {lineno}: duration_s must be a "
                                f"non-negative number, got {duration!r}")
            raw_label = str(row["label_raw"]).strip().lower()
            label = RAW_LABEL_MAP.get(raw_label)
            if label is None:
                skipped[raw_label] += 1
                continue
            # relative audio paths resolve against the manifest's directory,
            # so a dataset tree can be moved or read from any working dir
            audio = Path(str(row["audio"]))
            if not audio.is_absolute():
                audio = base / audio
            records.append(UtteranceRecord(
                id=utt_id,
                session=session,
                speaker=str(row["speaker"]),
                label=label,
                audio_path=str(audio),
                transcript=str(row["transcript"]),
                duration_s=float(duration),
            ))
    return LoadReport(records=records, skipped=skipped)


def crop_frames(seq: FrameSequence, max_s: float = MAX_CROP_S) -> FrameSequence:
    """Keep at most the first floor(max_s * 1000 / hop_ms) frames.

    Sequences at or under the limit pass through unchanged.
    """
    limit = math.floor(max_s * 1000.0 / seq.frame_hop_ms)
    if seq.num_frames <= limit:
        return seq
    return FrameSequence(seq.frames[:limit].copy(),
                         frame_hop_ms=seq.frame_hop_ms,
                         source_kind=seq.source_kind)


@dataclass(frozen=True)
class Fold:
    test_session: int
    train_sessions: tuple


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple

    def __iter__(self):
        return iter(self.folds)

    def __len__(self) -> int:
        return len(self.folds)


def make_folds(records) -> FoldPlan:
    """One fold per session: fold k holds session k out for testing."""
    present = {r.session for r in records}
    missing = sorted(set(SESSIONS) - present)
    if missing:
        raise DataError(f"records must span all 5 sessions; missing {missing}")
    folds = tuple(
        Fold(test_session=k,
             train_sessions=tuple(s for s in SESSIONS if s != k))
        for k in SESSIONS
    )
    return FoldPlan(folds=folds)


def split_fold(records, fold: Fold):
    """Partition records into (train, test) lists for one fold."""
    train = [r for r in records if r.session in fold.train_sessions]
    test = [r for r in records if r.session == fold.test_session]
    return train, test


def subsample_balanced(records, per_class: int, seed: int) -> list:
    """Pick exactly `per_class` records of each class, uniformly without
    replacement.

    Selections are nested: with the same seed and records, a larger
    per_class extends the smaller selection rather than redrawing it,
    so data-scaling curve points differ only by added data.
    """
    if per_class < 0:
        raise DataError(f"per_class must be >= 0, got {per_class}")
    if per_class == 0:
        return []
    by_class = {label: [] for label in CLASSES}
    for record in records:
        by_class[record.label].append(record)
    rng = np.random.default_rng(seed)
    chosen = []
    for label in CLASSES:
        group = by_class[label]
        order = rng.permutation(len(group))
        if per_class > len(group):
            raise DataError(f"class {label!r} has only {len(group)} records, "
                            f"cannot sample {per_class}")
        chosen.extend(group[i] for i in order[:per_class])
    return chosen


def embedding_path(emb_root, source_kind: str, utt_id: str) -> Path:
    """Resolve where an utterance's embedding container lives."""
    return Path(emb_root) / source_kind / f"{utt_id}.emb1"
