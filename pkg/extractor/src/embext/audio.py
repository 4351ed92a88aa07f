"""WAV loading normalized to mono float32 at 16 kHz."""

from fractions import Fraction

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import UtteranceError

TARGET_RATE = 16000

_INT_SCALES = {np.dtype(np.int16): 32768.0, np.dtype(np.int32): 2147483648.0}


def load_wav_16k(path) -> np.ndarray:
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise UtteranceError(f"audio file not found: {path}")
    except ValueError as exc:
        raise UtteranceError(f"{path}: {exc}")
    if data.size == 0:
        raise UtteranceError(f"{path}: empty audio stream")
    samples = np.asarray(data, dtype=np.float64)
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if data.dtype in _INT_SCALES:
        samples /= _INT_SCALES[data.dtype]
    elif data.dtype == np.uint8:
        samples = (samples - 128.0) / 128.0
    if rate != TARGET_RATE:
        ratio = Fraction(TARGET_RATE, int(rate))
        samples = resample_poly(samples, ratio.numerator, ratio.denominator)
    return np.clip(samples, -1.0, 1.0).astype(np.float32)
