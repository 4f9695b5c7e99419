"""Shared builders for randomized test instances."""

from __future__ import annotations

import numpy as np
import pytest

from mcenhance.linalg import hermitize
from mcenhance.mcem import LatentChain
from mcenhance.model import UnsupervisedParams
from mcenhance.nn import Layer, NetworkWeights, Standardization


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_pd(rng: np.random.Generator, dim: int,
              cond: float = 100.0) -> np.ndarray:
    """Hermitian PD with condition number <= cond."""
    u = random_unitary(rng, dim)
    eigs = np.exp(rng.uniform(0.0, np.log(cond), size=dim))
    eigs[rng.integers(dim)] = 1.0      # pins the scale so cond is respected
    return hermitize((u * eigs) @ np.conj(u.T))


def random_psd(rng: np.random.Generator, dim: int,
               rank: int | None = None) -> np.ndarray:
    """Hermitian PSD, optionally rank-deficient."""
    rank = dim if rank is None else rank
    a = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    return hermitize(a @ np.conj(a.T))


def random_pd_stack(rng: np.random.Generator, shape, dim: int,
                    cond: float = 100.0) -> np.ndarray:
    """Stack of PD matrices with leading dimensions ``shape``."""
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    count = int(np.prod(shape)) if shape else 1
    flat = np.stack([random_pd(rng, dim, cond) for _ in range(count)])
    return flat.reshape(shape + (dim, dim))


def make_decoder(n_bins: int, latent_dim: int, rng: np.random.Generator,
                 hidden: int = 16, log_bias=None) -> NetworkWeights:
    """Two-layer decoder with optional per-bin output bias."""
    w1 = (rng.standard_normal((hidden, latent_dim))
          / np.sqrt(latent_dim)).astype(np.float32)
    w2 = (rng.standard_normal((n_bins, hidden))
          / np.sqrt(hidden)).astype(np.float32)
    bias = np.zeros(n_bins, dtype=np.float32) if log_bias is None \
        else np.asarray(log_bias, dtype=np.float32)
    return NetworkWeights(
        layers=(
            Layer(weight=w1, bias=np.zeros(hidden, dtype=np.float32),
                  activation="relu"),
            Layer(weight=w2, bias=bias, activation="identity"),
        ),
        latent_dim=latent_dim,
        spectrum_dim=n_bins,
    )


def make_encoder(n_bins: int, latent_dim: int, rng: np.random.Generator,
                 hidden: int = 16) -> NetworkWeights:
    w1 = (rng.standard_normal((hidden, n_bins))
          / np.sqrt(n_bins)).astype(np.float32)
    w2 = (rng.standard_normal((2 * latent_dim, hidden))
          / np.sqrt(hidden)).astype(np.float32)
    return NetworkWeights(
        layers=(
            Layer(weight=w1, bias=np.zeros(hidden, dtype=np.float32),
                  activation="relu"),
            Layer(weight=w2, bias=np.zeros(2 * latent_dim, dtype=np.float32),
                  activation="identity"),
        ),
        latent_dim=latent_dim,
        spectrum_dim=n_bins,
        input_standardization=Standardization(
            mean=np.zeros(n_bins, dtype=np.float32),
            std=np.ones(n_bins, dtype=np.float32)),
    )


def random_params(rng: np.random.Generator, n_bins: int, n_frames: int,
                  n_channels: int, k_b: int,
                  random_scm: bool = True) -> UnsupervisedParams:
    if random_scm:
        r_s = random_pd_stack(rng, n_bins, n_channels, cond=50.0)
        r_b = random_pd_stack(rng, n_bins, n_channels, cond=50.0)
    else:
        eye = np.broadcast_to(np.eye(n_channels, dtype=np.complex128),
                              (n_bins, n_channels, n_channels)).copy()
        r_s, r_b = eye, eye.copy()
    return UnsupervisedParams(
        w_b=rng.uniform(0.1, 1.0, size=(n_bins, k_b)),
        h_b=rng.uniform(0.1, 1.0, size=(k_b, n_frames)),
        g=rng.uniform(0.5, 2.0, size=n_frames),
        r_s=r_s,
        r_b=r_b,
    )


def random_instance(rng: np.random.Generator, n_channels: int = 2,
                    n_bins: int = 4, n_frames: int = 3, k_b: int = 2,
                    n_kept: int = 2, latent_dim: int = 3):
    """A consistent (x, params, decoder, chain) tuple for EM-level tests."""
    decoder = make_decoder(n_bins, latent_dim, rng)
    params = random_params(rng, n_bins, n_frames, n_channels, k_b)
    x = (rng.standard_normal((n_channels, n_bins, n_frames))
         + 1j * rng.standard_normal((n_channels, n_bins, n_frames)))
    z = rng.standard_normal((n_kept, n_frames, latent_dim))
    chain = LatentChain(samples=z, current=z[-1].copy())
    return x, params, decoder, chain


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260813)
