"""Trainer for the spectrum networks consumed by the enhancement engine.

Fits a variational autoencoder over clean-speech power spectra: the
decoder maps an L-dimensional latent vector to per-bin log-variances,
the encoder maps a power spectrum to the mean and log-variance of a
Gaussian posterior over the latent space.  Trained weights are exported
in the shared binary container format; that file is the only coupling
to the enhancement engine.
"""

from .config import TrainingConfig
from .elbo import compute_elbo
from .export import export_weights
from .train import TrainResult, train, train_on_frames

__all__ = [
    "TrainingConfig",
    "compute_elbo",
    "export_weights",
    "TrainResult",
    "train",
    "train_on_frames",
]

__version__ = "0.1.0"
