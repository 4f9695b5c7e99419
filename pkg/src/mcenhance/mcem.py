"""Monte Carlo EM: Metropolis-Hastings E-step, majorization M-step.

The E-step samples latent vectors z_n (one independent random-walk chain
per frame) from p(z_n | x_:n) and keeps the last R states.  The M-step
minimizes the sampled objective

    C(theta) = sum_r sum_fn [x^H Sigma_x^{-1} x + ln det Sigma_x]

with one sweep of five multiplicative/Riccati sub-updates (W_b, H_b, g,
R_s, R_b), each of which is guaranteed not to increase C on the fixed
sample set.  Sigma_x and the weighted statistics are recomputed after every
sub-update.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import inverse, log_det_pd, solve_riccati
from .model import (NMF_FLOOR, UnsupervisedParams, init_params, noise_psd,
                    normalize, sigma_x)
from .nn import NetworkWeights, decoder_forward, encoder_forward
from .stft import MultichannelSTFT

__all__ = [
    "McemConfig",
    "LatentChain",
    "mh_step",
    "e_step",
    "q_tilde",
    "cost",
    "m_step",
    "m_step_updates",
    "run",
]


@dataclass(frozen=True)
class McemConfig:
    """EM and sampler settings.

    Defaults: 50 EM iterations, 40 MH iterations per E-step with the first
    30 discarded (so R = 10 kept samples), random-walk proposal variance
    0.01, noise NMF rank 10.
    """

    em_iterations: int = 50
    mh_iterations: int = 40
    burn_in: int = 30
    proposal_variance: float = 0.01
    n_noise_components: int = 10
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.em_iterations < 0:
            raise ValueError("em_iterations must be >= 0")
        if not 0 <= self.burn_in < self.mh_iterations:
            raise ValueError("need 0 <= burn_in < mh_iterations")
        if self.proposal_variance <= 0:
            raise ValueError("proposal_variance must be positive")
        if self.n_noise_components < 1:
            raise ValueError("n_noise_components must be >= 1")

    @property
    def kept_samples(self) -> int:
        return self.mh_iterations - self.burn_in


@dataclass
class LatentChain:
    """Kept E-step samples plus the live chain state.

    ``samples`` has shape (R, N, L); ``current`` is the last state (N, L)
    and seeds the next E-step.  ``accept_rate`` is the mean MH acceptance
    over the sweep that produced the samples (diagnostic only).
    """

    samples: np.ndarray
    current: np.ndarray
    accept_rate: float | None = field(default=None, compare=False)

    @property
    def n_kept(self) -> int:
        return self.samples.shape[0]


def _x_vectors(x: MultichannelSTFT | np.ndarray) -> np.ndarray:
    """Observation tensor as (F, N, I) complex vectors."""
    data = x.data if isinstance(x, MultichannelSTFT) else np.asarray(x)
    return np.ascontiguousarray(np.moveaxis(data, 0, -1))


def _frame_log_target(x_vec: np.ndarray, params: UnsupervisedParams,
                      decoder: NetworkWeights, z: np.ndarray) -> np.ndarray:
    """Per-frame log p(z_n) + sum_f log p(x_fn | z_n), shape (N,)."""
    sv = decoder_forward(decoder, z)            # (N, F)
    sigma = sigma_x(params, sv.T)               # (F, N, I, I)
    inv = inverse(sigma)
    quad = np.einsum("fni,fnij,fnj->fn",
                     np.conj(x_vec), inv, x_vec).real
    n_ch = x_vec.shape[-1]
    n_bins = x_vec.shape[0]
    loglik = -(quad + log_det_pd(sigma)).sum(axis=0) \
        - n_bins * n_ch * np.log(np.pi)
    latent_dim = z.shape[-1]
    prior = -0.5 * (z * z).sum(axis=-1) - 0.5 * latent_dim * np.log(2 * np.pi)
    return loglik + prior


def _mh_sweep(x_vec, params, decoder, z, log_target, step: float,
              rng: np.random.Generator):
    """One random-walk proposal per frame; returns (z, log_target, accepted)."""
    proposal = z + step * rng.standard_normal(z.shape)
    lt_prop = _frame_log_target(x_vec, params, decoder, proposal)
    accept = np.log(rng.random(z.shape[0])) < lt_prop - log_target
    z = np.where(accept[:, None], proposal, z)
    log_target = np.where(accept, lt_prop, log_target)
    return z, log_target, accept


def mh_step(chain: LatentChain, x, params: UnsupervisedParams,
            weights: NetworkWeights, rng: np.random.Generator,
            proposal_variance: float = 0.01) -> LatentChain:
    """One Metropolis-Hastings move applied independently to every frame.

    Each frame proposes z~_n ~ N(z_n, eps^2 I) and accepts with probability
    min(1, p(z~_n) prod_f p(x_fn|z~_n) / [p(z_n) prod_f p(x_fn|z_n)]),
    evaluated in the log domain.
    """
    x_vec = _x_vectors(x)
    z = chain.current
    lt = _frame_log_target(x_vec, params, weights, z)
    z, _, accept = _mh_sweep(x_vec, params, weights, z, lt,
                             np.sqrt(proposal_variance), rng)
    return LatentChain(samples=z[None].copy(), current=z,
                       accept_rate=float(accept.mean()))


def e_step(x, params: UnsupervisedParams, weights: NetworkWeights,
           chain_init, cfg: McemConfig,
           rng: np.random.Generator) -> LatentChain:
    """Run cfg.mh_iterations MH moves, keep the last R = iterations - burn_in.

    ``chain_init`` is the starting state, an (N, L) array or a LatentChain
    whose ``current`` is used.
    """
    x_vec = _x_vectors(x)
    z = chain_init.current if isinstance(chain_init, LatentChain) else chain_init
    z = np.array(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] != x_vec.shape[1]:
        raise ValueError("chain_init must have shape (n_frames, latent_dim)")
    step = np.sqrt(cfg.proposal_variance)
    lt = _frame_log_target(x_vec, params, weights, z)
    kept = []
    n_accept = 0.0
    for it in range(cfg.mh_iterations):
        z, lt, accept = _mh_sweep(x_vec, params, weights, z, lt, step, rng)
        n_accept += accept.mean()
        if it >= cfg.burn_in:
            kept.append(z.copy())
    return LatentChain(samples=np.stack(kept), current=z,
                       accept_rate=float(n_accept / cfg.mh_iterations))


def _speech_var_samples(decoder: NetworkWeights,
                        chain: LatentChain) -> np.ndarray:
    """Decoder variances for every kept sample, shape (R, F, N)."""
    sv = decoder_forward(decoder, chain.samples)      # (R, N, F)
    return np.ascontiguousarray(np.swapaxes(sv, 1, 2))


def _sample_cost(x_vec: np.ndarray, params: UnsupervisedParams,
                 sv_samples: np.ndarray) -> float:
    """C(theta) = sum_r sum_fn [x^H Sigma^{-1} x + ln det Sigma]."""
    total = 0.0
    for sv in sv_samples:
        sigma = sigma_x(params, sv)
        inv = inverse(sigma)
        quad = np.einsum("fni,fnij,fnj->fn",
                         np.conj(x_vec), inv, x_vec).real
        total += float((quad + log_det_pd(sigma)).sum())
    return total


def q_tilde(x, params: UnsupervisedParams, weights: NetworkWeights,
            chain: LatentChain) -> float:
    """Sampled E-step objective, up to an additive constant.

    Returns (-1/R) sum_r sum_fn [x^H Sigma^{-1} x + ln det Sigma]; the
    M-step minimizes C = -R * q_tilde.
    """
    x_vec = _x_vectors(x)
    sv_samples = _speech_var_samples(weights, chain)
    return -_sample_cost(x_vec, params, sv_samples) / chain.n_kept


def cost(x, params: UnsupervisedParams, weights: NetworkWeights,
         chain: LatentChain) -> float:
    """M-step objective C(theta) = -R * q_tilde on the chain's sample set."""
    x_vec = _x_vectors(x)
    return _sample_cost(x_vec, params, _speech_var_samples(weights, chain))


def _stats_pass(x_vec, params, sv_samples, *, trace_with=None,
                speech_weighted=False, riccati_for=None):
    """Accumulate M-step sufficient statistics over the sample set.

    One pass over r computes, with y = Sigma^{-1} x and M = y y^H:
      trace_with=R:        (tm, ts) with tm[f,n] = sum_r tr(M R_f),
                           ts[f,n] = sum_r tr(Sigma^{-1} R_f)
      speech_weighted:     per-frame sums num[n], den[n] of
                           sum_f sv_r[f,n] * {tr(M R_s), tr(Sigma^{-1} R_s)}
      riccati_for=(R, c):  (Psi, B) with Psi[f] = sum_rn c_r[f,n] Sigma^{-1},
                           B[f] = sum_rn c_r[f,n] M; c_r is (F, N) per
                           sample (a (F, N) array is broadcast across r)
    """
    if trace_with is not None:
        tm = 0.0
        ts = 0.0
    if speech_weighted:
        num = 0.0
        den = 0.0
    if riccati_for is not None:
        scm, coeff = riccati_for
        psi = np.zeros_like(scm)
        bmat = np.zeros_like(scm)
    for r, sv in enumerate(sv_samples):
        sigma = sigma_x(params, sv)
        inv = inverse(sigma)
        y = np.einsum("fnij,fnj->fni", inv, x_vec)
        if trace_with is not None:
            tm = tm + np.einsum("fni,fij,fnj->fn",
                                np.conj(y), trace_with, y).real
            ts = ts + np.einsum("fnij,fji->fn", inv, trace_with).real
        if speech_weighted:
            tr_m = np.einsum("fni,fij,fnj->fn",
                             np.conj(y), params.r_s, y).real
            tr_s = np.einsum("fnij,fji->fn", inv, params.r_s).real
            num = num + (sv * tr_m).sum(axis=0)
            den = den + (sv * tr_s).sum(axis=0)
        if riccati_for is not None:
            c = coeff[r] if coeff.ndim == 3 else coeff
            psi += np.einsum("fn,fnij->fij", c, inv)
            bmat += np.einsum("fn,fni,fnj->fij", c, y, np.conj(y))
    if trace_with is not None:
        return tm, ts
    if speech_weighted:
        return num, den
    return psi, bmat


def m_step_updates(x, params: UnsupervisedParams, weights: NetworkWeights,
                   chain: LatentChain):
    """Yield (name, params) after each sub-update, in order
    "w_b", "h_b", "g", "r_s", "r_b".

    Every sub-update refreshes Sigma_x (and hence the statistics) before
    running, applies a closed-form multiplicative or Riccati step, and is
    individually non-increasing in C on the fixed sample set.
    Normalization is not included (it leaves C unchanged).
    """
    x_vec = _x_vectors(x)
    sv_samples = _speech_var_samples(weights, chain)
    p = params.copy()

    tm, ts = _stats_pass(x_vec, p, sv_samples, trace_with=p.r_b)
    p.w_b = np.maximum(p.w_b * np.sqrt((tm @ p.h_b.T) / (ts @ p.h_b.T)),
                       NMF_FLOOR)
    yield "w_b", p.copy()

    tm, ts = _stats_pass(x_vec, p, sv_samples, trace_with=p.r_b)
    p.h_b = np.maximum(p.h_b * np.sqrt((p.w_b.T @ tm) / (p.w_b.T @ ts)),
                       NMF_FLOOR)
    yield "h_b", p.copy()

    num, den = _stats_pass(x_vec, p, sv_samples, speech_weighted=True)
    p.g = np.maximum(p.g * np.sqrt(num / den), NMF_FLOOR)
    yield "g", p.copy()

    psi, bmat = _stats_pass(x_vec, p, sv_samples,
                            riccati_for=(p.r_s, p.g * sv_samples))
    p.r_s = solve_riccati(psi, p.r_s @ bmat @ p.r_s)
    yield "r_s", p.copy()

    psi, bmat = _stats_pass(x_vec, p, sv_samples,
                            riccati_for=(p.r_b, noise_psd(p)))
    p.r_b = solve_riccati(psi, p.r_b @ bmat @ p.r_b)
    yield "r_b", p.copy()


def m_step(x, params: UnsupervisedParams, weights: NetworkWeights,
           chain: LatentChain) -> UnsupervisedParams:
    """One sweep of the five sub-updates, then normalization and floors."""
    p = params
    for _, p in m_step_updates(x, params, weights, chain):
        pass
    return normalize(p)


def run(x, weights, cfg: McemConfig, rng: np.random.Generator | None = None,
        callback=None) -> tuple[UnsupervisedParams, LatentChain]:
    """Full MCEM driver.

    ``weights`` is a mapping with entries "decoder" and "encoder" (the
    format returned by nn.load_weights).  Parameters are initialized per
    the model module; the chain starts from one draw of the encoder
    posterior evaluated on the channel-averaged noisy power spectrum.
    ``callback``, when given, receives one dict per EM iteration with keys
    iteration, cost, accept_rate.
    """
    decoder = weights["decoder"]
    encoder = weights["encoder"]
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    data = x.data if isinstance(x, MultichannelSTFT) else np.asarray(x)
    n_ch, n_bins, n_frames = data.shape
    if n_bins != decoder.spectrum_dim:
        raise ValueError(
            f"STFT has {n_bins} bins but the decoder expects "
            f"{decoder.spectrum_dim}")
    params = init_params(n_bins, n_frames, n_ch,
                         cfg.n_noise_components, rng)
    power = np.mean(np.abs(data) ** 2, axis=0)            # (F, N)
    mu, var = encoder_forward(encoder, power.T)           # (N, L)
    z0 = mu + np.sqrt(var) * rng.standard_normal(mu.shape)
    chain = LatentChain(samples=z0[None].copy(), current=z0)
    for iteration in range(cfg.em_iterations):
        chain = e_step(x, params, decoder, chain, cfg, rng)
        params = m_step(x, params, decoder, chain)
        if callback is not None:
            callback({
                "iteration": iteration,
                "cost": cost(x, params, decoder, chain),
                "accept_rate": chain.accept_rate,
            })
    return params, chain
