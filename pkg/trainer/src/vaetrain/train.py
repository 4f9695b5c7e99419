"""Training loop: Adam on the negative bound with early stopping."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
import torch

from .config import TrainingConfig
from .elbo import compute_elbo
from .features import feature_statistics, load_corpus
from .nets import Decoder, Encoder, build_networks

# Validation noise is redrawn identically every evaluation so that
# epoch-to-epoch validation scores differ only through the parameters.
_VAL_NOISE_SALT = 0x5EED


@dataclass
class TrainResult:
    decoder: Decoder
    encoder: Encoder
    feature_mean: np.ndarray
    feature_std: np.ndarray
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def latent_dim(self) -> int:
        return self.decoder.latent_dim

    @property
    def spectrum_dim(self) -> int:
        return self.decoder.spectrum_dim


def _validation_elbo(frames: torch.Tensor, decoder, encoder,
                     seed: int) -> float:
    generator = torch.Generator().manual_seed(seed ^ _VAL_NOISE_SALT)
    with torch.no_grad():
        return float(compute_elbo(frames, decoder, encoder,
                                  generator=generator))


def train_on_frames(frames: np.ndarray,
                    cfg: TrainingConfig) -> TrainResult:
    """Fit the networks on (n_frames, n_bins) power spectra.

    Splits off a validation set, standardizes features from the
    training split only, optimizes the bound, and restores the weights
    of the best validation epoch before returning.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] < 2:
        raise ValueError("need at least two frames of power spectra")
    if np.any(frames < 0):
        raise ValueError("power spectra must be nonnegative")

    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(frames.shape[0])
    n_val = max(1, int(round(frames.shape[0] * cfg.validation_fraction)))
    n_val = min(n_val, frames.shape[0] - 1)
    val = torch.as_tensor(frames[order[:n_val]], dtype=torch.float64)
    train_frames = frames[order[n_val:]]

    mean, std = feature_statistics(train_frames)
    decoder, encoder = build_networks(frames.shape[1], cfg, mean, std)
    optimizer = torch.optim.Adam(
        list(decoder.parameters()) + list(encoder.parameters()),
        lr=cfg.learning_rate, betas=(cfg.beta1, cfg.beta2),
        eps=cfg.adam_epsilon)
    noise = torch.Generator().manual_seed(cfg.seed)

    result = TrainResult(decoder=decoder, encoder=encoder,
                         feature_mean=mean, feature_std=std)
    best_val = -np.inf
    best_state = None
    for epoch in range(1, cfg.max_epochs + 1):
        batch_order = rng.permutation(train_frames.shape[0])
        batch_elbos = []
        for start in range(0, train_frames.shape[0], cfg.batch_size):
            batch = torch.as_tensor(
                train_frames[batch_order[start:start + cfg.batch_size]],
                dtype=torch.float64)
            optimizer.zero_grad()
            elbo = compute_elbo(batch, decoder, encoder, generator=noise)
            (-elbo).backward()
            optimizer.step()
            batch_elbos.append(float(elbo.detach()))
        val_elbo = _validation_elbo(val, decoder, encoder, cfg.seed)
        result.history.append({"epoch": epoch,
                               "train_elbo": float(np.mean(batch_elbos)),
                               "val_elbo": val_elbo})
        if val_elbo > best_val:
            best_val = val_elbo
            result.best_epoch = epoch
            best_state = (copy.deepcopy(decoder.state_dict()),
                          copy.deepcopy(encoder.state_dict()))
        elif epoch - result.best_epoch >= cfg.patience:
            break
    decoder.load_state_dict(best_state[0])
    encoder.load_state_dict(best_state[1])
    return result


def train(corpus_paths, cfg: TrainingConfig, window_length: int = 1024,
          hop: int = 256) -> TrainResult:
    """Load a clean-speech corpus and fit the networks on it."""
    frames = load_corpus(corpus_paths, window_length, hop)
    return train_on_frames(frames, cfg)
