"""WAV ingestion: PCM/float, mono/stereo, resampled to the 16 kHz working rate."""

from dataclasses import dataclass
from math import gcd
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import DataError

TARGET_RATE = 16000

_INT_SCALE = {np.dtype(np.int16): 32768.0, np.dtype(np.int32): 2147483648.0}


@dataclass
class AudioClip:
    """Mono float64 samples in [-1, 1] at 16 kHz."""

    samples: np.ndarray
    sample_rate: int = TARGET_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise DataError("AudioClip needs a non-empty 1-D sample array")
        if self.sample_rate <= 0:
            raise DataError(f"sample_rate must be positive, got {self.sample_rate}")

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


def load_wav(path) -> AudioClip:
    """Read a WAV file, average channels to mono, resample to 16 kHz."""
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise DataError(f"cannot read WAV file {path}: {exc}") from exc
    if data.size == 0:
        raise DataError(f"empty WAV file: {path}")
    if data.dtype in _INT_SCALE:
        samples = data.astype(np.float64) / _INT_SCALE[data.dtype]
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise DataError(f"unsupported WAV sample format {data.dtype} in {path}")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if rate != TARGET_RATE:
        g = gcd(TARGET_RATE, int(rate))
        samples = resample_poly(samples, TARGET_RATE // g, int(rate) // g)
    # resampling may overshoot slightly; the [-1, 1] invariant is kept by clipping
    samples = np.clip(samples, -1.0, 1.0)
    return AudioClip(samples)
