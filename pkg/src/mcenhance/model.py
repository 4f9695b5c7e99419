"""Multichannel local Gaussian model: parameters, covariances, likelihood.

Each time-frequency observation is an I-channel complex vector x_fn modeled
as a zero-mean proper Gaussian whose covariance splits into a speech part
and a noise part:

    Sigma_x[f,n] = g[n] * speech_var[f,n] * R_s[f] + (W_b @ H_b)[f,n] * R_b[f]

The speech variance comes from a decoder network evaluated at a latent
vector; the noise variance is a rank-K_b NMF; R_s and R_b are per-frequency
Hermitian PD spatial covariance matrices; g is a per-frame gain.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .linalg import hermitize, inverse, log_det_pd

__all__ = [
    "NMF_FLOOR",
    "UnsupervisedParams",
    "init_params",
    "noise_psd",
    "sigma_x",
    "log_likelihood",
    "normalize",
    "params_to_dict",
    "params_from_dict",
    "save_params",
    "load_params",
]

NMF_FLOOR = 1e-10   # lower bound on W_b, H_b, g after every update


@dataclass
class UnsupervisedParams:
    """Model parameters estimated by the EM loop.

    Shapes: w_b (F, K_b), h_b (K_b, N), g (N,), r_s (F, I, I),
    r_b (F, I, I).  NMF factors and g are elementwise >= NMF_FLOOR;
    spatial covariances are Hermitian PD.
    """

    w_b: np.ndarray
    h_b: np.ndarray
    g: np.ndarray
    r_s: np.ndarray
    r_b: np.ndarray

    @property
    def n_bins(self) -> int:
        return self.w_b.shape[0]

    @property
    def n_frames(self) -> int:
        return self.h_b.shape[1]

    @property
    def n_channels(self) -> int:
        return self.r_s.shape[-1]

    def copy(self) -> "UnsupervisedParams":
        return UnsupervisedParams(
            w_b=self.w_b.copy(), h_b=self.h_b.copy(), g=self.g.copy(),
            r_s=self.r_s.copy(), r_b=self.r_b.copy())


def init_params(n_bins: int, n_frames: int, n_channels: int,
                n_noise_components: int,
                rng: np.random.Generator) -> UnsupervisedParams:
    """NMF factors uniform on [0.1, 1.0), gains all ones, SCMs identity."""
    if min(n_bins, n_frames, n_channels, n_noise_components) < 1:
        raise ValueError("all dimensions must be >= 1")
    eye = np.broadcast_to(np.eye(n_channels, dtype=np.complex128),
                          (n_bins, n_channels, n_channels)).copy()
    return UnsupervisedParams(
        w_b=rng.uniform(0.1, 1.0, size=(n_bins, n_noise_components)),
        h_b=rng.uniform(0.1, 1.0, size=(n_noise_components, n_frames)),
        g=np.ones(n_frames),
        r_s=eye,
        r_b=eye.copy(),
    )


def noise_psd(params: UnsupervisedParams) -> np.ndarray:
    """Noise power spectrogram (W_b @ H_b), shape (F, N)."""
    return params.w_b @ params.h_b


def sigma_x(params: UnsupervisedParams, speech_var) -> np.ndarray:
    """Mixture covariance stack for given speech variances.

    ``speech_var`` has shape (F, N) (leading batch axes allowed); the
    result has shape (..., F, N, I, I) and is Hermitian PD as long as the
    parameter floors hold.
    """
    sv = np.asarray(speech_var, dtype=np.float64)
    speech = (params.g * sv)[..., None, None] * params.r_s[:, None]
    noise = noise_psd(params)[:, :, None, None] * params.r_b[:, None]
    return speech + noise


def log_likelihood(x, sigma) -> np.ndarray:
    """Proper complex Gaussian log-density per bin.

    ``x`` has shape (..., I) and ``sigma`` (..., I, I); returns
    -I*ln(pi) - ln det(sigma) - x^H sigma^{-1} x elementwise over the
    leading axes.
    """
    x = np.asarray(x, dtype=np.complex128)
    n_ch = x.shape[-1]
    inv = inverse(sigma)
    quad = np.einsum("...i,...ij,...j->...", np.conj(x), inv, x).real
    return -n_ch * np.log(np.pi) - log_det_pd(sigma) - quad


def normalize(params: UnsupervisedParams) -> UnsupervisedParams:
    """Rescale so trace(R_b,f) = 1 and columns of W_b sum to 1.

    The released scale moves into W_b rows and H_b rows respectively, so
    every Sigma_x is left unchanged.  Floors are re-applied.
    """
    trace = np.einsum("fii->f", params.r_b).real
    r_b = hermitize(params.r_b / trace[:, None, None])
    w_b = params.w_b * trace[:, None]
    col = w_b.sum(axis=0)
    w_b = np.maximum(w_b / col, NMF_FLOOR)
    h_b = np.maximum(params.h_b * col[:, None], NMF_FLOOR)
    return dataclasses.replace(params, w_b=w_b, h_b=h_b, r_b=r_b,
                               g=np.maximum(params.g, NMF_FLOOR))


def _complex_to_pairs(arr: np.ndarray) -> list:
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _pairs_to_complex(obj) -> np.ndarray:
    pairs = np.asarray(obj, dtype=np.float64)
    return pairs[..., 0] + 1j * pairs[..., 1]


def params_to_dict(params: UnsupervisedParams) -> dict:
    """JSON-ready dict; complex entries become [re, im] pairs."""
    return {
        "w_b": params.w_b.tolist(),
        "h_b": params.h_b.tolist(),
        "g": params.g.tolist(),
        "r_s": _complex_to_pairs(params.r_s),
        "r_b": _complex_to_pairs(params.r_b),
    }


def params_from_dict(obj: dict) -> UnsupervisedParams:
    params = UnsupervisedParams(
        w_b=np.asarray(obj["w_b"], dtype=np.float64),
        h_b=np.asarray(obj["h_b"], dtype=np.float64),
        g=np.asarray(obj["g"], dtype=np.float64),
        r_s=_pairs_to_complex(obj["r_s"]),
        r_b=_pairs_to_complex(obj["r_b"]),
    )
    f, k = params.w_b.shape
    if params.h_b.shape[0] != k or params.g.shape != (params.h_b.shape[1],):
        raise ValueError("inconsistent parameter shapes")
    i = params.r_s.shape[-1]
    if params.r_s.shape != (f, i, i) or params.r_b.shape != (f, i, i):
        raise ValueError("inconsistent spatial covariance shapes")
    return params


def save_params(path, params: UnsupervisedParams) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params_to_dict(params), fh)


def load_params(path) -> UnsupervisedParams:
    with open(path, "r", encoding="utf-8") as fh:
        return params_from_dict(json.load(fh))
