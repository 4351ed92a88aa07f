"""embext: export pretrained speech/text representations as EMB1 containers.

Runs a frozen wav2vec-style convolutional encoder over 16 kHz audio
(512-dim context vectors every 10 ms) or a BERT encoder over transcripts
(768-dim second-to-last-layer vectors per sub-word token, special tokens
excluded) and writes one EMB1 container per utterance.
"""

from .emb1 import container_is_valid, read_emb1, write_emb1
from .jobs import ExtractionJob, JobSummary, run_job
from .manifest import read_manifest

__version__ = "0.1.0"

__all__ = [
    "ExtractionJob",
    "JobSummary",
    "container_is_valid",
    "read_emb1",
    "read_manifest",
    "run_job",
    "write_emb1",
]
