"""Training hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class TrainingConfig:
    """Optimizer and loop settings for a training run.

    Defaults follow the engine's training recipe: Adam with step size
    1e-3, moment decay rates (0.9, 0.999) and epsilon 1e-7, batches of
    128 frames, early stopping with a patience of 10 epochs, and a 20%
    validation split.
    """

    latent_dim: int
    hidden_dims: tuple[int, ...] = (128,)
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-7
    batch_size: int = 128
    patience: int = 10
    validation_fraction: float = 0.2
    max_epochs: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be at least 1")
        if not self.hidden_dims or any(h < 1 for h in self.hidden_dims):
            raise ValueError("hidden_dims must be positive")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        for name in ("beta1", "beta2"):
            rate = getattr(self, name)
            if not 0.0 < rate < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.adam_epsilon <= 0.0:
            raise ValueError("adam_epsilon must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in (0, 1)")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")
