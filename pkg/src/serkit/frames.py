"""Frame-level feature sequences: the common carrier for LLDs and pretrained embeddings."""

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionError

SOURCE_LLD = "lld"
SOURCE_WAV2VEC = "wav2vec"
SOURCE_BERT = "bert"

# Fixed per-frame dimensionality of each representation family.
SOURCE_DIMS = {SOURCE_LLD: 34, SOURCE_WAV2VEC: 512, SOURCE_BERT: 768}


@dataclass
class FrameSequence:
    """A T×n time-major matrix of per-frame feature vectors plus frame-rate metadata.

    ``frames`` is float64, one row per frame. ``frame_hop_ms`` is the hop between
    consecutive frames (for BERT token sequences the hop is nominal, not temporal).
    """

    frames: np.ndarray
    frame_hop_ms: float
    source_kind: str

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2:
            raise DimensionError(f"frames must be 2-D, got shape {self.frames.shape}")
        if self.source_kind not in SOURCE_DIMS:
            raise DataError(f"unknown source_kind {self.source_kind!r}")
        expected = SOURCE_DIMS[self.source_kind]
        if self.frames.shape[1] != expected:
            raise DimensionError(
                f"source_kind {self.source_kind!r} requires n={expected}, "
                f"got n={self.frames.shape[1]}"
            )
        if self.frames.shape[0] < 1:
            raise DataError("FrameSequence requires at least one frame")
        if not np.isfinite(self.frames).all():
            raise DataError("FrameSequence contains non-finite values")
        self.frame_hop_ms = float(self.frame_hop_ms)
        if not np.isfinite(self.frame_hop_ms) or self.frame_hop_ms <= 0:
            raise DataError(f"frame_hop_ms must be a positive finite value, "
                            f"got {self.frame_hop_ms}")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]
