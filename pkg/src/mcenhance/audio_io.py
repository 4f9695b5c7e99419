"""WAV reading/writing: PCM 16-bit and IEEE float-32, mono or multichannel.

Samples are exchanged as float64 arrays of shape ``(channels, n)`` with
values normalized to ``[-1, 1)``.
"""

from __future__ import annotations

import numpy as np
from scipy.io import wavfile

__all__ = ["read_wav", "write_wav"]


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a WAV file; returns ``(data (channels, n), sample_rate)``."""
    rate, raw = wavfile.read(path)
    if raw.dtype == np.int16:
        data = raw.astype(np.float64) / 32768.0
    elif raw.dtype in (np.float32, np.float64):
        data = raw.astype(np.float64)
    else:
        raise ValueError(
            f"unsupported WAV sample format {raw.dtype}; "
            "expected PCM 16-bit or IEEE float-32"
        )
    if data.ndim == 1:
        data = data[None, :]
    else:
        data = data.T
    return data, int(rate)


def write_wav(path, data, sample_rate: int, pcm16: bool = False) -> None:
    """Write ``(channels, n)`` or ``(n,)`` samples as float-32 (default) or PCM16."""
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] == 0:
        raise ValueError("data must be a non-empty 1-D or 2-D array")
    out = x.T if x.shape[0] > 1 else x[0]
    if pcm16:
        scaled = np.clip(np.round(out * 32768.0), -32768, 32767)
        wavfile.write(path, sample_rate, scaled.astype(np.int16))
    else:
        wavfile.write(path, sample_rate, out.astype(np.float32))
