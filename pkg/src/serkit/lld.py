"""Hand-engineered low-level descriptors: 34 features per 50 ms frame.

Feature order (fixed, one row per frame):

    0   zero-crossing rate
    1   energy
    2   entropy of energy
    3   spectral centroid (Hz)
    4   spectral spread (Hz)
    5   spectral entropy
    6   spectral flux
    7   spectral rolloff at 85% (Hz)
    8-20  MFCC 1-13
    21-32 12-bin chroma
    33  chroma deviation (std of the 12 chroma bins)

Centroid/spread/rolloff weight the power spectrum (tight single-tone
localization); entropy uses 10 sub-bands; MFCCs use 26 triangular mel filters
over 0-8 kHz, a 1e-10 log floor and an orthonormal DCT-II. All features are
finite for any input, including all-zero frames, via the 1e-10 epsilon floor.
"""

from functools import lru_cache

import numpy as np
from scipy.fft import dct

from .audio import AudioClip
from .errors import ConfigError, DataError
from .frames import SOURCE_LLD, FrameSequence

NUM_LLD = 34
EPS = 1e-10

LLD_FEATURE_NAMES = (
    ["zcr", "energy", "energy_entropy", "spectral_centroid", "spectral_spread",
     "spectral_entropy", "spectral_flux", "spectral_rolloff"]
    + [f"mfcc_{i}" for i in range(1, 14)]
    + [f"chroma_{i}" for i in range(1, 13)]
    + ["chroma_deviation"]
)

DEFAULT_WINDOW_MS = 50.0
DEFAULT_HOP_MS = 25.0
ROLLOFF_FRACTION = 0.85
NUM_MEL_FILTERS = 26
NUM_MFCC = 13


def _next_pow2(n: int) -> int:
    return 1 << (n - 1).bit_length()


def frame_signal(clip: AudioClip, window_ms: float = DEFAULT_WINDOW_MS,
                 hop_ms: float = DEFAULT_HOP_MS) -> np.ndarray:
    """Slice into Hamming-windowed frames: T = floor((N - window)/hop) + 1.

    A trailing partial frame is dropped, never padded.
    """
    if not (window_ms >= hop_ms > 0):
        raise ConfigError(f"need window_ms >= hop_ms > 0, got window={window_ms}, hop={hop_ms}")
    win = int(round(clip.sample_rate * window_ms / 1000.0))
    hop = int(round(clip.sample_rate * hop_ms / 1000.0))
    n = clip.samples.size
    if n < win:
        raise DataError(f"clip of {n} samples is shorter than one {win}-sample window")
    num_frames = (n - win) // hop + 1
    window = np.hamming(win)
    idx = np.arange(win)[None, :] + hop * np.arange(num_frames)[:, None]
    return clip.samples[idx] * window


def _zcr(frame: np.ndarray) -> float:
    signs = np.sign(frame)
    return float(np.abs(np.diff(signs)).sum() / (2.0 * (frame.size - 1)))


def _energy(frame: np.ndarray) -> float:
    return float(np.dot(frame, frame) / frame.size)


def _block_entropy(values: np.ndarray, n_blocks: int = 10) -> float:
    """Shannon entropy (bits) of the energy distribution over equal sub-blocks."""
    usable = values[: (values.size // n_blocks) * n_blocks]
    blocks = usable.reshape(n_blocks, -1).sum(axis=1)
    p = blocks / (blocks.sum() + EPS)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def _spectral_moments(power: np.ndarray, freqs: np.ndarray):
    total = power.sum() + EPS
    centroid = float((freqs * power).sum() / total)
    spread = float(np.sqrt(((freqs - centroid) ** 2 * power).sum() / total))
    return centroid, spread


def _spectral_rolloff(power: np.ndarray, freqs: np.ndarray,
                      fraction: float = ROLLOFF_FRACTION) -> float:
    cum = np.cumsum(power)
    total = cum[-1]
    if total <= 0.0:
        return 0.0
    idx = int(np.searchsorted(cum, fraction * total))
    return float(freqs[min(idx, freqs.size - 1)])


def _spectral_flux(mag: np.ndarray, prev_mag) -> float:
    if prev_mag is None:
        return 0.0
    cur = mag / (mag.sum() + EPS)
    prev = prev_mag / (prev_mag.sum() + EPS)
    return float(((cur - prev) ** 2).sum())


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def _mel_filterbank(sample_rate: int, n_fft: int, n_filters: int = NUM_MEL_FILTERS,
                    f_lo: float = 0.0, f_hi: float = 8000.0) -> np.ndarray:
    """Triangular (peak 1) mel filters over the rfft bins, n_filters x n_bins."""
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sample_rate)
    edges = _mel_to_hz(np.linspace(_hz_to_mel(f_lo), _hz_to_mel(f_hi), n_filters + 2))
    bank = np.zeros((n_filters, freqs.size))
    for i in range(n_filters):
        lo, mid, hi = edges[i], edges[i + 1], edges[i + 2]
        rising = (freqs - lo) / max(mid - lo, EPS)
        falling = (hi - freqs) / max(hi - mid, EPS)
        bank[i] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


@lru_cache(maxsize=8)
def _chroma_masks(sample_rate: int, n_fft: int) -> np.ndarray:
    """12 x n_bins membership matrix mapping rfft bins to pitch classes (A = class 0)."""
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sample_rate)
    masks = np.zeros((12, freqs.size))
    positive = freqs > 0
    classes = np.zeros(freqs.size, dtype=int)
    classes[positive] = np.round(12.0 * np.log2(freqs[positive] / 27.5)).astype(int) % 12
    for k in range(12):
        masks[k, positive & (classes == k)] = 1.0
    return masks


def mfcc(frame_power_spectrum: np.ndarray, sample_rate: int = 16000) -> np.ndarray:
    """First 13 cepstral coefficients of the 26-filter log-mel spectrum."""
    power = np.asarray(frame_power_spectrum, dtype=np.float64)
    n_fft = 2 * (power.size - 1)
    bank = _mel_filterbank(sample_rate, n_fft)
    log_energies = np.log(np.maximum(bank @ power, EPS))
    return dct(log_energies, type=2, norm="ortho")[:NUM_MFCC]


def _chroma(power: np.ndarray, sample_rate: int, n_fft: int) -> np.ndarray:
    masks = _chroma_masks(sample_rate, n_fft)
    return (masks @ power) / (power.sum() + EPS)


def extract_lld(clip: AudioClip, window_ms: float = DEFAULT_WINDOW_MS,
                hop_ms: float = DEFAULT_HOP_MS) -> FrameSequence:
    """Extract the 34-feature LLD matrix, one row per frame.

    Pure: the same clip always produces a bit-identical FrameSequence.
    """
    frames = frame_signal(clip, window_ms, hop_ms)
    win = frames.shape[1]
    n_fft = _next_pow2(win)
    freqs = np.fft.rfftfreq(n_fft, 1.0 / clip.sample_rate)
    out = np.zeros((frames.shape[0], NUM_LLD))
    prev_mag = None
    for i, frame in enumerate(frames):
        mag = np.abs(np.fft.rfft(frame, n_fft))
        power = mag * mag
        centroid, spread = _spectral_moments(power, freqs)
        chroma = _chroma(power, clip.sample_rate, n_fft)
        out[i, 0] = _zcr(frame)
        out[i, 1] = _energy(frame)
        out[i, 2] = _block_entropy(frame * frame)
        out[i, 3] = centroid
        out[i, 4] = spread
        out[i, 5] = _block_entropy(power)
        out[i, 6] = _spectral_flux(mag, prev_mag)
        out[i, 7] = _spectral_rolloff(power, freqs)
        out[i, 8:21] = mfcc(power, clip.sample_rate)
        out[i, 21:33] = chroma
        out[i, 33] = chroma.std()
        prev_mag = mag
    return FrameSequence(out, frame_hop_ms=hop_ms, source_kind=SOURCE_LLD)
