"""Corpus loading: WAV files to per-frame power spectra."""

from __future__ import annotations

import numpy as np
from scipy.io import wavfile

from .nets import LOG_FLOOR

SILENCE_THRESHOLD_DB = -80.0


class CorpusError(RuntimeError):
    """The corpus is empty, unreadable, or all silence."""


def sine_window(length: int) -> np.ndarray:
    return np.sin(np.pi * (np.arange(length) + 0.5) / length)


def read_wav_mono(path) -> np.ndarray:
    """Float samples in [-1, 1]; multichannel input is averaged."""
    try:
        _, data = wavfile.read(path)
    except (OSError, ValueError) as exc:
        raise CorpusError(f"{path}: unreadable WAV: {exc}") from exc
    if np.issubdtype(data.dtype, np.integer):
        scale = float(np.iinfo(data.dtype).max) + 1.0
        data = data.astype(np.float64) / scale
    else:
        data = np.asarray(data, dtype=np.float64)
    if data.ndim == 2:
        data = data.mean(axis=1)
    return data


def power_frames(signal, window_length: int = 1024,
                 hop: int = 256) -> np.ndarray:
    """Per-frame power spectra, shape (n_frames, n_bins).

    Sine-window analysis with edge zero-padding of one window minus one
    hop on both sides, the same framing the enhancement engine uses.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        raise ValueError("signal must be one-dimensional")
    if window_length % hop != 0 or hop >= window_length:
        raise ValueError("hop must divide and be smaller than the window")
    pad = window_length - hop
    padded = np.concatenate([np.zeros(pad), signal, np.zeros(pad)])
    window = sine_window(window_length)
    starts = range(0, padded.size - window_length + 1, hop)
    frames = np.stack([padded[s:s + window_length] * window
                       for s in starts])
    return np.abs(np.fft.rfft(frames, axis=1)) ** 2


def drop_quiet_frames(frames: np.ndarray,
                      threshold_db: float = SILENCE_THRESHOLD_DB
                      ) -> np.ndarray:
    """Remove frames more than ``threshold_db`` below the loudest one."""
    frames = np.asarray(frames, dtype=np.float64)
    level = frames.mean(axis=1)
    peak = level.max(initial=0.0)
    if peak <= 0.0:
        raise CorpusError("corpus contains only silence")
    keep = level > peak * 10.0 ** (threshold_db / 10.0)
    return frames[keep]


def load_corpus(paths, window_length: int = 1024,
                hop: int = 256) -> np.ndarray:
    """Power-spectrum frames of every file, silence dropped."""
    paths = list(paths)
    if not paths:
        raise CorpusError("corpus is empty")
    frames = np.concatenate([
        power_frames(read_wav_mono(p), window_length, hop) for p in paths])
    return drop_quiet_frames(frames)


def feature_statistics(frames: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Frequency-wise mean and deviation of the log power spectrum."""
    feat = np.log(np.asarray(frames, dtype=np.float64) + LOG_FLOOR)
    mean = feat.mean(axis=0)
    std = feat.std(axis=0)
    return mean, np.maximum(std, 1e-6)
