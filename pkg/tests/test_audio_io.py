"""WAV I/O: shape conventions, dtype handling, round trips."""

import numpy as np
import pytest
from scipy.io import wavfile

from mcenhance.audio_io import read_wav, write_wav


def test_float_round_trip_stereo(tmp_path, rng):
    data = 0.5 * rng.standard_normal((2, 400))
    path = tmp_path / "x.wav"
    write_wav(path, data, 16000)
    loaded, rate = read_wav(path)
    assert rate == 16000
    assert loaded.shape == (2, 400)
    np.testing.assert_allclose(loaded, data, atol=1e-7)


def test_mono_vector_reads_back_as_row(tmp_path, rng):
    data = 0.1 * rng.standard_normal(256)
    path = tmp_path / "m.wav"
    write_wav(path, data, 8000)
    loaded, rate = read_wav(path)
    assert rate == 8000
    assert loaded.shape == (1, 256)
    np.testing.assert_allclose(loaded[0], data, atol=1e-7)


def test_pcm16_round_trip_quantizes(tmp_path):
    data = np.linspace(-0.9, 0.9, 100)
    path = tmp_path / "p.wav"
    write_wav(path, data, 16000, pcm16=True)
    rate, raw = wavfile.read(path)
    assert raw.dtype == np.int16
    loaded, _ = read_wav(path)
    np.testing.assert_allclose(loaded[0], data, atol=1.0 / 32768)


def test_pcm16_clips_out_of_range(tmp_path):
    path = tmp_path / "c.wav"
    write_wav(path, np.array([2.0, -2.0]), 16000, pcm16=True)
    _, raw = wavfile.read(path)
    assert raw[0] == 32767
    assert raw[1] == -32768


def test_reading_pcm16_normalizes(tmp_path):
    path = tmp_path / "n.wav"
    wavfile.write(path, 16000, np.array([16384, -32768], np.int16))
    loaded, _ = read_wav(path)
    np.testing.assert_allclose(loaded[0], [0.5, -1.0])


def test_unsupported_dtype_raises(tmp_path):
    path = tmp_path / "u.wav"
    wavfile.write(path, 16000, np.zeros(10, np.int32))
    with pytest.raises(ValueError, match="format"):
        read_wav(path)


def test_empty_data_raises(tmp_path):
    with pytest.raises(ValueError):
        write_wav(tmp_path / "e.wav", np.zeros((1, 0)), 16000)
