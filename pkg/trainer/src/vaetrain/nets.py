"""Torch modules for the decoder and encoder.

Both are plain affine stacks with relu between hidden layers and an
identity output layer, matching the inference runtime's layer
vocabulary.  All computation is double precision; exported tensors are
rounded to float32 by the writer.
"""

from __future__ import annotations

import math

import numpy as np
import torch

from .config import TrainingConfig

LOG_FLOOR = 1e-12     # additive floor before taking log of power spectra
VAR_FLOOR = 1e-10     # lower bound on variances at inference
LOG_VAR_MAX = 80.0    # keeps exp() finite


def _uniform_stack(dims, generator) -> torch.nn.ModuleList:
    """Affine layers with U(-1/sqrt(fan_in), 1/sqrt(fan_in)) init."""
    layers = torch.nn.ModuleList()
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        linear = torch.nn.Linear(fan_in, fan_out, dtype=torch.float64)
        bound = 1.0 / math.sqrt(fan_in)
        with torch.no_grad():
            linear.weight.uniform_(-bound, bound, generator=generator)
            linear.bias.uniform_(-bound, bound, generator=generator)
        layers.append(linear)
    return layers


def _run_stack(layers, h):
    for idx, linear in enumerate(layers):
        h = linear(h)
        if idx < len(layers) - 1:
            h = torch.relu(h)
    return h


class Decoder(torch.nn.Module):
    """Latent vector -> per-bin log-variance of the speech spectrum."""

    def __init__(self, latent_dim: int, spectrum_dim: int,
                 hidden_dims: tuple[int, ...], generator) -> None:
        super().__init__()
        self.latent_dim = latent_dim
        self.spectrum_dim = spectrum_dim
        self.stack = _uniform_stack(
            (latent_dim, *hidden_dims, spectrum_dim), generator)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return torch.clamp(_run_stack(self.stack, z), max=LOG_VAR_MAX)


class Encoder(torch.nn.Module):
    """Power spectrum -> (mean, log-variance) of the latent posterior.

    The frequency-wise standardization of the log spectrum is stored in
    fixed buffers computed once from the training split; it is part of
    the model, not of the data pipeline, and ships inside the exported
    weight file.
    """

    def __init__(self, latent_dim: int, spectrum_dim: int,
                 hidden_dims: tuple[int, ...], generator,
                 feature_mean: np.ndarray, feature_std: np.ndarray) -> None:
        super().__init__()
        self.latent_dim = latent_dim
        self.spectrum_dim = spectrum_dim
        self.stack = _uniform_stack(
            (spectrum_dim, *hidden_dims, 2 * latent_dim), generator)
        self.register_buffer(
            "feature_mean",
            torch.as_tensor(feature_mean, dtype=torch.float64))
        self.register_buffer(
            "feature_std",
            torch.as_tensor(feature_std, dtype=torch.float64))

    def forward(self, power: torch.Tensor):
        feat = torch.log(power + LOG_FLOOR)
        feat = (feat - self.feature_mean) / self.feature_std
        out = _run_stack(self.stack, feat)
        mu = out[..., :self.latent_dim]
        log_var = torch.clamp(out[..., self.latent_dim:], max=LOG_VAR_MAX)
        return mu, log_var


def build_networks(spectrum_dim: int, cfg: TrainingConfig,
                   feature_mean: np.ndarray,
                   feature_std: np.ndarray) -> tuple[Decoder, Encoder]:
    """Seed-controlled construction of a decoder/encoder pair."""
    generator = torch.Generator().manual_seed(cfg.seed)
    decoder = Decoder(cfg.latent_dim, spectrum_dim, cfg.hidden_dims,
                      generator)
    encoder = Encoder(cfg.latent_dim, spectrum_dim, cfg.hidden_dims,
                      generator, feature_mean, feature_std)
    return decoder, encoder
