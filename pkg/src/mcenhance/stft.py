"""Sine-window STFT analysis/synthesis with exact overlap-add reconstruction.

The analysis window is ``w[t] = sin(pi * (t + 0.5) / window_length)``.  At an
integer overlap ratio ``window_length / hop = k >= 2`` the squared windows of
the overlapping frames sum to exactly ``k / 2`` at every sample, so weighted
overlap-add with the same window and a constant divisor reconstructs the
input to machine precision.  The signal is zero-padded by
``window_length - hop`` samples on both ends so that every original sample
is covered by the full set of overlapping frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["StftConfig", "MultichannelSTFT", "sine_window", "analyze", "synthesize"]


@dataclass(frozen=True)
class StftConfig:
    """Transform geometry. Defaults: 64 ms window, 75% overlap at 16 kHz."""

    sample_rate: int = 16000
    window_length: int = 1024
    hop: int = 256

    def __post_init__(self):
        if self.window_length <= 0 or self.hop <= 0:
            raise ValueError("window_length and hop must be positive")
        if self.window_length % self.hop != 0:
            raise ValueError("hop must divide window_length")
        if self.window_length // self.hop < 2:
            raise ValueError("need at least 2x overlap for exact reconstruction")

    @property
    def fft_size(self) -> int:
        return self.window_length

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def overlap_constant(self) -> float:
        """Constant value of the summed squared windows."""
        return (self.window_length // self.hop) / 2.0

    @property
    def pad(self) -> int:
        return self.window_length - self.hop


@dataclass
class MultichannelSTFT:
    """Complex STFT coefficients indexed ``(channel, bin, frame)``.

    ``n_samples`` records the original waveform length so synthesis can crop
    the padding back off; it is None for spectra not derived from a waveform.
    """

    data: np.ndarray
    n_samples: int | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 3:
            raise ValueError("expected data of shape (channels, bins, frames)")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_bins(self) -> int:
        return self.data.shape[1]

    @property
    def n_frames(self) -> int:
        return self.data.shape[2]


def sine_window(length: int) -> np.ndarray:
    return np.sin(np.pi * (np.arange(length) + 0.5) / length)


def _frame_count(n_samples: int, cfg: StftConfig) -> int:
    # Last frame must still cover the final original sample (which sits at
    # padded position pad + n_samples - 1).
    return (cfg.pad + n_samples - 1) // cfg.hop + 1


def analyze(signal, cfg: StftConfig = StftConfig()) -> MultichannelSTFT:
    """Transform a mono ``(n,)`` or multichannel ``(channels, n)`` waveform.

    Raises ValueError on empty input, non-finite samples, or signals shorter
    than one window.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] == 0:
        raise ValueError("signal must be a non-empty 1-D or 2-D array")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal contains non-finite samples")
    n = x.shape[1]
    if n < cfg.window_length:
        raise ValueError(
            f"signal length {n} shorter than window ({cfg.window_length})"
        )

    n_frames = _frame_count(n, cfg)
    total = (n_frames - 1) * cfg.hop + cfg.window_length
    padded = np.zeros((x.shape[0], total))
    padded[:, cfg.pad:cfg.pad + n] = x

    window = sine_window(cfg.window_length)
    frames = np.lib.stride_tricks.sliding_window_view(
        padded, cfg.window_length, axis=1)[:, ::cfg.hop, :]
    spec = np.fft.rfft(frames * window, n=cfg.fft_size, axis=2)
    return MultichannelSTFT(spec.transpose(0, 2, 1), n_samples=n)


def synthesize(spec: MultichannelSTFT, cfg: StftConfig = StftConfig()) -> np.ndarray:
    """Weighted overlap-add inverse of :func:`analyze`.

    Returns a ``(channels, n_samples)`` waveform; padding added by the
    analysis stage is removed.
    """
    if spec.n_bins != cfg.n_bins:
        raise ValueError(
            f"spectrum has {spec.n_bins} bins, config expects {cfg.n_bins}"
        )
    n_frames = spec.n_frames
    total = (n_frames - 1) * cfg.hop + cfg.window_length
    window = sine_window(cfg.window_length)

    frames = np.fft.irfft(spec.data.transpose(0, 2, 1), n=cfg.fft_size, axis=2)
    frames *= window
    out = np.zeros((spec.n_channels, total))
    for m in range(n_frames):
        out[:, m * cfg.hop:m * cfg.hop + cfg.window_length] += frames[:, m, :]
    out /= cfg.overlap_constant

    if spec.n_samples is not None:
        n = spec.n_samples
        expected = _frame_count(n, cfg)
        if expected != n_frames:
            raise ValueError(
                f"{n_frames} frames inconsistent with n_samples={n} "
                f"(expected {expected})"
            )
    else:
        n = total - 2 * cfg.pad
    return out[:, cfg.pad:cfg.pad + n]
