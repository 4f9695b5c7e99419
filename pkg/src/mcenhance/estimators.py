"""Estimator-style wrappers over the functional pipeline.

These follow the scikit-learn conventions (constructor stores
hyperparameters verbatim, ``fit`` learns state into trailing-underscore
attributes, ``get_params``/``set_params``/``clone`` work) so the engine
composes with that ecosystem's tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import baseline as _baseline
from . import mcem as _mcem
from . import nn as _nn
from . import wiener as _wiener
from .stft import StftConfig, analyze
from .validation import check_power_spectra, check_random_state, check_waveform

__all__ = [
    "SpeechDictionaryLearner",
    "VaeNmfEnhancer",
    "NmfEnhancer",
]


class SpeechDictionaryLearner(TransformerMixin, BaseEstimator):
    """Itakura-Saito NMF dictionary learner for the supervised baseline.

    ``X`` follows the scikit-learn layout (n_samples, n_features), i.e.
    frames by frequency bins; internally the transposed (F, T) convention
    is used.  After fitting, ``dictionary_`` holds the frozen
    SpeechDictionary and ``components_`` the (n_components, n_features)
    matrix.
    """

    def __init__(self, n_components: int = 32, iterations: int = 500,
                 tol: float = 1e-6, random_state=None):
        self.n_components = n_components
        self.iterations = iterations
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y=None):
        v = check_power_spectra(X).T
        rng = check_random_state(self.random_state)
        self.dictionary_ = _baseline.pretrain_dictionary(
            v, self.n_components, iterations=self.iterations, rng=rng,
            tol=self.tol)
        self.components_ = self.dictionary_.w_s.T.copy()
        self.n_features_in_ = v.shape[0]
        return self

    def transform(self, X):
        """Activations (n_samples, n_components) with the dictionary frozen."""
        self._check_fitted()
        v = np.maximum(check_power_spectra(X).T, _baseline.NMF_FLOOR)
        if v.shape[0] != self.n_features_in_:
            raise ValueError(
                f"X has {v.shape[0]} features, expected {self.n_features_in_}")
        w = self.dictionary_.w_s
        rng = check_random_state(self.random_state)
        h = rng.uniform(0.1, 1.0, size=(w.shape[1], v.shape[1]))
        for _ in range(self.iterations):
            vhat = np.maximum(w @ h, _baseline.NMF_FLOOR)
            h *= np.sqrt((w.T @ (v / vhat ** 2)) / (w.T @ (1.0 / vhat)))
            h = np.maximum(h, _baseline.NMF_FLOOR)
        return h.T

    def _check_fitted(self) -> None:
        if not hasattr(self, "dictionary_"):
            raise RuntimeError("fit must be called first")


class _EnhancerBase(TransformerMixin, BaseEstimator):
    """Shared STFT plumbing for the two enhancers."""

    def _stft_config(self) -> StftConfig:
        return StftConfig(sample_rate=self.sample_rate,
                          window_length=self.window_length, hop=self.hop)

    def _analyze(self, X):
        wav = check_waveform(X)
        return wav, analyze(wav, self._stft_config())


class VaeNmfEnhancer(_EnhancerBase):
    """Full MCEM enhancer driven by pretrained decoder/encoder networks.

    ``weights`` is a path to a weight bundle or the dict returned by
    nn.load_weights.  ``fit(X)`` runs MCEM on the waveform ``X`` of shape
    (n_channels, n_samples); ``transform(X)`` Wiener-filters ``X`` with the
    fitted parameters and returns the enhanced speech waveform of the same
    shape.  ``predict`` is an alias for ``transform``.
    """

    def __init__(self, weights=None, sample_rate: int = 16000,
                 window_length: int = 1024, hop: int = 256,
                 em_iterations: int = 50, mh_iterations: int = 40,
                 burn_in: int = 30, proposal_variance: float = 0.01,
                 n_noise_components: int = 10,
                 reconstruct_iterations: int = 100,
                 reconstruct_burn_in: int = 50, random_state=None):
        self.weights = weights
        self.sample_rate = sample_rate
        self.window_length = window_length
        self.hop = hop
        self.em_iterations = em_iterations
        self.mh_iterations = mh_iterations
        self.burn_in = burn_in
        self.proposal_variance = proposal_variance
        self.n_noise_components = n_noise_components
        self.reconstruct_iterations = reconstruct_iterations
        self.reconstruct_burn_in = reconstruct_burn_in
        self.random_state = random_state

    def _networks(self) -> dict:
        if self.weights is None:
            raise ValueError("weights must be set before fitting")
        if isinstance(self.weights, dict):
            return self.weights
        return _nn.load_weights(self.weights)

    def _mcem_config(self) -> _mcem.McemConfig:
        return _mcem.McemConfig(
            em_iterations=self.em_iterations,
            mh_iterations=self.mh_iterations,
            burn_in=self.burn_in,
            proposal_variance=self.proposal_variance,
            n_noise_components=self.n_noise_components)

    def fit(self, X, y=None):
        _, spec = self._analyze(X)
        rng = check_random_state(self.random_state)
        networks = self._networks()
        self.params_, self.chain_ = _mcem.run(
            spec, networks, self._mcem_config(), rng=rng)
        # Snapshot, not the live generator: transform must be a pure
        # function of the fitted state, however often it is called.
        self.rng_state_ = rng.bit_generator.state
        self.n_features_in_ = spec.n_bins
        return self

    def transform(self, X):
        if not hasattr(self, "params_"):
            raise RuntimeError("fit must be called first")
        _, spec = self._analyze(X)
        rng = np.random.default_rng()
        rng.bit_generator.state = self.rng_state_
        result = _wiener.wiener_estimate(
            spec, self.params_, self._networks()["decoder"], self.chain_,
            _wiener.ReconstructionConfig(
                mh_iterations=self.reconstruct_iterations,
                burn_in=self.reconstruct_burn_in,
                proposal_variance=self.proposal_variance),
            rng, self._stft_config())
        self.result_ = result
        return result.speech_wav

    def predict(self, X):
        return self.transform(X)


class NmfEnhancer(_EnhancerBase):
    """Supervised-NMF baseline enhancer.

    ``dictionary`` is a path to a dictionary container or a
    SpeechDictionary.  ``fit(X)`` runs the deterministic EM sweeps;
    ``transform(X)`` returns the enhanced speech waveform.
    """

    def __init__(self, dictionary=None, sample_rate: int = 16000,
                 window_length: int = 1024, hop: int = 256,
                 iterations: int = 50, n_noise_components: int = 10,
                 random_state=None):
        self.dictionary = dictionary
        self.sample_rate = sample_rate
        self.window_length = window_length
        self.hop = hop
        self.iterations = iterations
        self.n_noise_components = n_noise_components
        self.random_state = random_state

    def _dictionary(self) -> _baseline.SpeechDictionary:
        if self.dictionary is None:
            raise ValueError("dictionary must be set before fitting")
        if isinstance(self.dictionary, _baseline.SpeechDictionary):
            return self.dictionary
        return _baseline.load_dictionary(self.dictionary)

    def fit(self, X, y=None):
        _, spec = self._analyze(X)
        rng = check_random_state(self.random_state)
        self.params_, self.result_ = _baseline.run_baseline(
            spec, self._dictionary(), iterations=self.iterations,
            n_noise_components=self.n_noise_components, rng=rng,
            stft_cfg=self._stft_config())
        self.n_features_in_ = spec.n_bins
        return self

    def transform(self, X):
        if not hasattr(self, "params_"):
            raise RuntimeError("fit must be called first")
        _, spec = self._analyze(X)
        result = _baseline.baseline_wiener(
            spec, self._dictionary(), self.params_, self._stft_config())
        self.result_ = result
        return result.speech_wav

    def predict(self, X):
        return self.transform(X)
