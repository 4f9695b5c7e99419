"""Shared fixtures for the trainer suite."""

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260813)


@pytest.fixture
def two_component_frames(rng):
    """100 power-spectrum frames from a known 2-component model.

    Per-frame variances are W h with random nonnegative factors; each
    observed power is an exponential draw with that mean, the power
    statistics of a circular complex Gaussian spectrum.
    """
    n_bins, n_comp, n_frames = 16, 2, 100
    w = rng.uniform(0.5, 2.0, (n_bins, n_comp))
    h = rng.uniform(0.2, 1.5, (n_comp, n_frames))
    return rng.exponential((w @ h).T)
