"""Tests for WAV ingestion: dtype normalization, downmix, resampling."""

import numpy as np
import pytest
from scipy.io import wavfile

from serkit.audio import TARGET_RATE, AudioClip, load_wav
from serkit.errors import DataError


def test_int16_round_trip(tmp_path):
    x = (np.array([0, 16384, -16384, 32767, -32768], dtype=np.int16)
         .repeat(200))
    path = tmp_path / "a.wav"
    wavfile.write(path, 16000, x)
    clip = load_wav(path)
    assert clip.sample_rate == TARGET_RATE
    assert clip.samples.dtype == np.float64
    np.testing.assert_allclose(clip.samples, x / 32768.0, atol=1e-12)


def test_float32_passthrough(tmp_path):
    x = np.linspace(-0.9, 0.9, 1000, dtype=np.float32)
    path = tmp_path / "f.wav"
    wavfile.write(path, 16000, x)
    clip = load_wav(path)
    np.testing.assert_allclose(clip.samples, x.astype(np.float64), atol=1e-7)


def test_uint8_centered(tmp_path):
    x = np.full(1000, 128, dtype=np.uint8)
    path = tmp_path / "u.wav"
    wavfile.write(path, 16000, x)
    clip = load_wav(path)
    np.testing.assert_array_equal(clip.samples, 0.0)


def test_stereo_downmixes_to_mean(tmp_path):
    left = np.full(500, 8000, dtype=np.int16)
    right = np.full(500, -8000, dtype=np.int16)
    path = tmp_path / "s.wav"
    wavfile.write(path, 16000, np.stack([left, right], axis=1))
    clip = load_wav(path)
    assert clip.samples.ndim == 1
    np.testing.assert_allclose(clip.samples, 0.0, atol=1e-12)


def test_resamples_to_16k(tmp_path):
    t = np.arange(8000) / 8000.0
    x = (0.5 * np.sin(2 * np.pi * 440.0 * t) * 32767).astype(np.int16)
    path = tmp_path / "r.wav"
    wavfile.write(path, 8000, x)
    clip = load_wav(path)
    assert clip.sample_rate == TARGET_RATE
    assert clip.samples.size == 16000
    # Resampling preserves the tone: dominant rfft bin stays at 440 Hz.
    spectrum = np.abs(np.fft.rfft(clip.samples))
    peak_hz = np.argmax(spectrum) * TARGET_RATE / clip.samples.size
    assert abs(peak_hz - 440.0) < 2.0


def test_values_clipped_to_unit_range(tmp_path):
    t = np.arange(4000) / 8000.0
    x = (0.99 * np.sin(2 * np.pi * 1000.0 * t) * 32767).astype(np.int16)
    path = tmp_path / "c.wav"
    wavfile.write(path, 8000, x)
    clip = load_wav(path)
    assert clip.samples.max() <= 1.0
    assert clip.samples.min() >= -1.0


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "e.wav"
    wavfile.write(path, 16000, np.zeros(0, dtype=np.int16))
    with pytest.raises(DataError):
        load_wav(path)


def test_clip_validates_shape_and_rate():
    with pytest.raises(DataError):
        AudioClip(samples=np.zeros((10, 2)), sample_rate=16000)
    with pytest.raises(DataError):
        AudioClip(samples=np.zeros(10), sample_rate=0)


def test_duration():
    clip = AudioClip(samples=np.zeros(8000), sample_rate=16000)
    assert clip.duration_s == 0.5
