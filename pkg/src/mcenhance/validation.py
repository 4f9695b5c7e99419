"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numpy as np

__all__ = [
    "check_waveform",
    "check_power_spectra",
    "check_random_state",
]


def check_waveform(x, name: str = "X") -> np.ndarray:
    """Coerce to a finite float64 (n_channels, n_samples) array.

    Mono 1-D input is promoted to a single-channel row.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] == 0:
        raise ValueError(
            f"{name} must be a 1-D or (n_channels, n_samples) array, "
            f"got shape {np.shape(x)}")
    if arr.shape[0] > arr.shape[1]:
        raise ValueError(
            f"{name} has more channels ({arr.shape[0]}) than samples "
            f"({arr.shape[1]}); expected (n_channels, n_samples) layout")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite samples")
    return np.ascontiguousarray(arr)


def check_power_spectra(x, name: str = "X") -> np.ndarray:
    """Coerce to a finite nonnegative float64 2-D array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 2-D array")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if np.any(arr < 0):
        raise ValueError(f"{name} contains negative power values")
    return arr


def check_random_state(seed) -> np.random.Generator:
    """None, an int seed, or a Generator; anything else is rejected."""
    if seed is None or isinstance(seed, (int, np.integer)):
        return np.random.default_rng(seed)
    if isinstance(seed, np.random.Generator):
        return seed
    raise ValueError(f"cannot build a Generator from {seed!r}")
