"""Per-utterance extraction jobs: embarrassingly parallel, idempotent.

Each utterance maps to exactly one output file whose bytes depend only
on the utterance and the model, never on which other utterances share
the run. Files that already decode cleanly are skipped, so re-running a
partially finished job completes it.
"""

from dataclasses import dataclass, field
from pathlib import Path

from .audio import load_wav_16k
from .bert import NOMINAL_HOP_MS, load_bert
from .emb1 import container_is_valid, write_emb1
from .errors import ExtractorError, UtteranceError
from .manifest import read_manifest
from .wav2vec import HOP_MS, extract_wav2vec, load_wav2vec

MODALITIES = ("wav2vec", "bert")


@dataclass(frozen=True)
class ExtractionJob:
    manifest: str
    out_root: str
    modality: str
    model_id: str = "seeded:0"
    device: str = "cpu"

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ExtractorError(f"unknown modality {self.modality!r}; "
                                 f"expected one of {MODALITIES}")


@dataclass
class JobSummary:
    written: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {"written": self.written, "skipped": self.skipped,
                "failures": self.failures}


def _wav2vec_worker(job):
    model = load_wav2vec(job.model_id, job.device)

    def run(utterance):
        samples = load_wav_16k(utterance.audio_path)
        return extract_wav2vec(model, samples), HOP_MS

    return run


def _bert_worker(job):
    embedder = load_bert(job.model_id, job.device)

    def run(utterance):
        return embedder.embed(utterance.transcript), NOMINAL_HOP_MS

    return run


def run_job(job: ExtractionJob) -> JobSummary:
    utterances = read_manifest(job.manifest)
    worker = (_wav2vec_worker if job.modality == "wav2vec"
              else _bert_worker)(job)
    out_dir = Path(job.out_root) / job.modality
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = JobSummary()
    for utterance in utterances:
        path = out_dir / f"{utterance.id}.emb1"
        if container_is_valid(path):
            summary.skipped.append(utterance.id)
            continue
        try:
            matrix, hop_ms = worker(utterance)
            write_emb1(path, matrix, job.modality, hop_ms)
        except (UtteranceError, OSError) as exc:
            summary.failures.append({"id": utterance.id, "error": str(exc)})
            continue
        summary.written.append(utterance.id)
    return summary
