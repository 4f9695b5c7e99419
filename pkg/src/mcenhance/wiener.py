"""Posterior-mean source reconstruction via multichannel Wiener filtering.

Given converged parameters, fresh latent samples are drawn with the same
Metropolis-Hastings kernel as the E-step.  For each kept sample the speech
gain matrix

    G_fn(z) = g_n sigma_f^2(z_n) R_s,f Sigma_x,fn(z_n)^{-1}

is applied to the mixture; the noise gain is its complement (I - G), so the
per-sample estimates sum exactly to the mixture.  Averaging over samples
gives the posterior-mean estimates of the scaled speech image and of the
noise, which are then synthesized back to waveforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import inverse
from .mcem import McemConfig, e_step
from .model import UnsupervisedParams, sigma_x
from .nn import NetworkWeights, decoder_forward
from .stft import MultichannelSTFT, StftConfig, synthesize

__all__ = [
    "ReconstructionConfig",
    "EnhancementResult",
    "wiener_estimate",
]


@dataclass(frozen=True)
class ReconstructionConfig:
    """Sampler budget for the final estimate (larger than the E-step's)."""

    mh_iterations: int = 100
    burn_in: int = 50
    proposal_variance: float = 0.01

    def __post_init__(self) -> None:
        if not 0 <= self.burn_in < self.mh_iterations:
            raise ValueError("need 0 <= burn_in < mh_iterations")
        if self.proposal_variance <= 0:
            raise ValueError("proposal_variance must be positive")


@dataclass
class EnhancementResult:
    """Speech/noise estimates; speech_stft + noise_stft equals the input."""

    speech_stft: MultichannelSTFT
    noise_stft: MultichannelSTFT
    speech_wav: np.ndarray
    noise_wav: np.ndarray


def wiener_estimate(x: MultichannelSTFT, params: UnsupervisedParams,
                    weights: NetworkWeights, chain_init,
                    sampler_cfg: ReconstructionConfig,
                    rng: np.random.Generator,
                    stft_cfg: StftConfig) -> EnhancementResult:
    """Average the per-sample Wiener estimates over fresh MH samples.

    ``chain_init`` is the final E-step chain (or an (N, L) state array);
    ``weights`` is the decoder network.
    """
    sampler = McemConfig(em_iterations=0,
                         mh_iterations=sampler_cfg.mh_iterations,
                         burn_in=sampler_cfg.burn_in,
                         proposal_variance=sampler_cfg.proposal_variance)
    chain = e_step(x, params, weights, chain_init, sampler, rng)
    x_vec = np.moveaxis(x.data, 0, -1)                 # (F, N, I)
    speech_acc = np.zeros_like(x_vec)
    for z in chain.samples:
        sv = decoder_forward(weights, z).T             # (F, N)
        inv = inverse(sigma_x(params, sv))
        gain = (params.g * sv)[..., None, None] * (params.r_s[:, None] @ inv)
        speech_acc += np.einsum("fnij,fnj->fni", gain, x_vec)
    speech_vec = speech_acc / chain.n_kept
    noise_vec = x_vec - speech_vec
    speech = MultichannelSTFT(np.moveaxis(speech_vec, -1, 0),
                              n_samples=x.n_samples)
    noise = MultichannelSTFT(np.moveaxis(noise_vec, -1, 0),
                             n_samples=x.n_samples)
    return EnhancementResult(
        speech_stft=speech,
        noise_stft=noise,
        speech_wav=synthesize(speech, stft_cfg),
        noise_wav=synthesize(noise, stft_cfg),
    )
