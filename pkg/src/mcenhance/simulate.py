"""Synthetic stereo mixture generation for datasets and tests.

Spatialization assumes free-field propagation over a two-microphone array:
one channel is the input, the other is delayed by tau = spacing*sin(doa)/c.
The delay is applied as an exact frequency-domain phase ramp (unitary, so
per-channel energy is preserved); the FFT length includes 512 padding
samples and is forced odd so every retained bin carries a unit-modulus
factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import psd_sqrt
from .model import UnsupervisedParams, noise_psd
from .nn import NetworkWeights, decoder_forward
from .stft import MultichannelSTFT

__all__ = [
    "MixSpec",
    "spatialize",
    "mix",
    "generate_from_model",
]

_EDGE_PAD = 512


@dataclass(frozen=True)
class MixSpec:
    """Geometry and level settings for one synthetic mixture."""

    doa: float                  # degrees in [-90, 90]
    mic_spacing: float = 0.05   # meters
    sound_speed: float = 343.0  # m/s
    snr_db: float = 0.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if not -90.0 <= self.doa <= 90.0:
            raise ValueError("doa must lie in [-90, 90] degrees")
        if self.mic_spacing <= 0:
            raise ValueError("mic_spacing must be positive")
        if self.sound_speed <= 0:
            raise ValueError("sound_speed must be positive")

    def delay_seconds(self) -> float:
        return self.mic_spacing * np.sin(np.radians(self.doa)) \
            / self.sound_speed


def spatialize(signal, spec: MixSpec, sample_rate: int = 16000) -> np.ndarray:
    """Mono to stereo by exact fractional delay of the second channel.

    Output shape is (2, n + pad) with pad >= 512 (both channels keep the
    padded length so the delayed content is never cropped).
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("spatialize needs a nonempty mono signal")
    delay = spec.delay_seconds() * sample_rate
    n_fft = x.size + _EDGE_PAD
    if n_fft % 2 == 0:
        n_fft += 1
    bins = np.arange(n_fft // 2 + 1)
    ramp = np.exp(-2j * np.pi * bins * delay / n_fft)
    delayed = np.fft.irfft(np.fft.rfft(x, n_fft) * ramp, n_fft)
    reference = np.zeros(n_fft)
    reference[:x.size] = x
    return np.stack([reference, delayed])


def mix(speech, noise, snr_db: float) -> tuple[np.ndarray, np.ndarray,
                                               np.ndarray]:
    """Scale noise to the requested SNR and sum.

    SNR uses total multichannel power.  Noise longer than the speech is
    cropped; shorter noise is looped.  Returns (mixture, speech,
    scaled_noise) with mixture = speech + scaled_noise exactly.
    """
    s = np.atleast_2d(np.asarray(speech, dtype=np.float64))
    b = np.atleast_2d(np.asarray(noise, dtype=np.float64))
    if s.shape[0] != b.shape[0]:
        raise ValueError("channel counts differ")
    n = s.shape[1]
    if b.shape[1] < n:
        reps = -(-n // b.shape[1])
        b = np.tile(b, (1, reps))
    b = b[:, :n]
    p_s = float((s * s).sum())
    p_b = float((b * b).sum())
    if p_s == 0.0 or p_b == 0.0:
        raise ValueError("speech and noise must both have nonzero power")
    scale = np.sqrt(p_s / p_b * 10.0 ** (-snr_db / 10.0))
    b = scale * b
    return s + b, s, b


def generate_from_model(weights: NetworkWeights, params: UnsupervisedParams,
                        n_bins: int, n_frames: int, n_channels: int,
                        seed=None) -> tuple[MultichannelSTFT,
                                            MultichannelSTFT,
                                            MultichannelSTFT]:
    """Sample (scaled speech, noise, mixture) STFTs from the model.

    Draws z_n ~ N(0, I), s_fn ~ N_c(0, sigma_f^2(z_n) R_s,f),
    b_fn ~ N_c(0, (W_b H_b)_{fn} R_b,f), and forms x = sqrt(g_n) s + b.
    The returned speech is the scaled image sqrt(g_n) s, so the three
    spectrograms satisfy speech + noise = mixture exactly.
    """
    rng = np.random.default_rng(seed)
    if (params.n_bins, params.n_frames, params.n_channels) != \
            (n_bins, n_frames, n_channels):
        raise ValueError("params shapes do not match the requested dims")
    if weights.spectrum_dim != n_bins:
        raise ValueError("decoder output does not match n_bins")
    z = rng.standard_normal((n_frames, weights.latent_dim))
    sv = decoder_forward(weights, z).T                       # (F, N)
    r_s_half = psd_sqrt(params.r_s)                          # (F, I, I)
    r_b_half = psd_sqrt(params.r_b)

    def _draw(var, scm_half):
        e = (rng.standard_normal((n_bins, n_frames, n_channels))
             + 1j * rng.standard_normal((n_bins, n_frames, n_channels))) \
            / np.sqrt(2.0)
        vec = np.sqrt(var)[..., None] * np.einsum(
            "fij,fnj->fni", scm_half, e)
        return np.moveaxis(vec, -1, 0)                       # (I, F, N)

    speech = np.sqrt(params.g) * _draw(sv, r_s_half)
    noise = _draw(noise_psd(params), r_b_half)
    return (MultichannelSTFT(speech),
            MultichannelSTFT(noise),
            MultichannelSTFT(speech + noise))
