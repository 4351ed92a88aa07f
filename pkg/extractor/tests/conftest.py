import json
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.io import wavfile

sys.path.insert(0, str(Path(__file__).parent))

RATE = 16000


def write_tone(path, seconds, freq=220.0):
    t = np.arange(int(seconds * RATE)) / RATE
    x = (0.5 * np.sin(2 * np.pi * freq * t) * 32767).astype(np.int16)
    wavfile.write(path, RATE, x)


def write_manifest(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    return path


@pytest.fixture(scope="session")
def speech_fixture(tmp_path_factory):
    """Three tones (one 5 s) plus a manifest referencing them."""
    root = tmp_path_factory.mktemp("speech")
    rows = []
    for name, seconds, freq in (("long", 5.0, 220.0),
                                ("mid", 1.0, 330.0),
                                ("short", 0.5, 440.0)):
        wav = root / f"{name}.wav"
        write_tone(wav, seconds, freq)
        rows.append({"id": name, "audio": str(wav),
                     "transcript": f"{name} tone"})
    manifest = write_manifest(root / "manifest.jsonl", rows)
    return root, manifest


@pytest.fixture(scope="session")
def wav2vec_model():
    from embext.wav2vec import load_wav2vec

    return load_wav2vec("seeded:0")


@pytest.fixture(scope="session")
def extracted_wav2vec(speech_fixture, tmp_path_factory):
    from embext.jobs import ExtractionJob, run_job

    root, manifest = speech_fixture
    out_root = tmp_path_factory.mktemp("emb_w2v")
    job = ExtractionJob(manifest=str(manifest), out_root=str(out_root),
                        modality="wav2vec", model_id="seeded:0")
    summary = run_job(job)
    assert summary.ok()
    return out_root, summary
