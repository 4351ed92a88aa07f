"""Synthetic sequence datasets for exercising the full pipeline.

Each class is a Gaussian bump around its own mean vector; each utterance
is T frames of that bump plus unit noise, with T drawn uniformly from a
range. Utterances are spread round-robin over the 5 sessions so fold
planning works exactly as it does on real data. The ``separation``
knob scales the distance between class means: large values make the
task trivially separable, small ones make it genuinely hard, which is
what the data-scaling experiments need.
"""

import json
from pathlib import Path

import numpy as np

from .data import CLASSES, SESSIONS
from .embio import write_container
from .errors import ConfigError
from .frames import SOURCE_DIMS, FrameSequence

DEFAULT_T_RANGE = (20, 100)


def class_means(rng: np.random.Generator, dim: int,
                separation: float) -> np.ndarray:
    """One mean vector per class, unit directions scaled by separation."""
    raw = rng.standard_normal((len(CLASSES), dim))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    return separation * raw


def synth_sequence(rng: np.random.Generator, mean: np.ndarray,
                   t_range=DEFAULT_T_RANGE) -> np.ndarray:
    t = int(rng.integers(t_range[0], t_range[1] + 1))
    return mean + rng.standard_normal((t, mean.size))


def make_synthetic_dataset(out_dir, source_kind: str, per_class: int,
                           seed: int = 0, separation: float = 6.0,
                           t_range=DEFAULT_T_RANGE):
    """Write a manifest plus EMB1 files under ``out_dir``.

    Layout matches the real pipeline: manifest.jsonl at the top,
    embeddings under <out_dir>/emb/<source_kind>/<id>.emb1. Returns the
    manifest path.
    """
    out_dir = Path(out_dir)
    if source_kind not in SOURCE_DIMS:
        raise ConfigError(f"unknown source kind {source_kind!r}")
    if per_class < 5:
        raise ConfigError("need at least 5 utterances per class so every "
                          "session sees every class")
    dim = SOURCE_DIMS[source_kind]
    # bert's hop is nominal (tokens are not time frames)
    hop_ms = {"lld": 25.0, "wav2vec": 10.0, "bert": 1.0}[source_kind]
    rng = np.random.default_rng(seed)
    means = class_means(rng, dim, separation)
    emb_dir = out_dir / "emb" / source_kind
    emb_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.jsonl"
    counter = 0
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for class_index, label in enumerate(CLASSES):
            for j in range(per_class):
                utt_id = f"syn_{label}_{j:04d}"
                session = SESSIONS[counter % len(SESSIONS)]
                counter += 1
                frames = synth_sequence(rng, means[class_index], t_range)
                seq = FrameSequence(frames, frame_hop_ms=hop_ms,
                                    source_kind=source_kind)
                write_container(emb_dir / f"{utt_id}.emb1", seq)
                fh.write(json.dumps({
                    "id": utt_id,
                    "session": session,
                    "speaker": f"synth{session}",
                    "label_raw": label,
                    "audio": f"synthetic/{utt_id}.wav",
                    "transcript": "synthetic",
                    "duration_s": frames.shape[0] * hop_ms / 1000.0,
                }) + "\n")
    return manifest_path
