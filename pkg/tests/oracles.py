"""Independent oracles used only by tests.

The majorizer below upper-bounds the sampled M-step objective

    C(theta) = sum_r sum_fn [x^H Sigma^{-1} x + ln det Sigma]

by splitting the quadratic term over the K_b + 1 covariance summands with
auxiliary matrices Phi (summing to the identity per bin) and bounding the
log-determinant through a linearization point Omega.  The production code
never materializes these auxiliaries; this module exists so tests can check
tightness and the majorization property against the analytically eliminated
updates.
"""

from __future__ import annotations

import numpy as np

from mcenhance.linalg import hermitize, inverse, log_det_pd
from mcenhance.model import UnsupervisedParams, sigma_x


def tight_auxiliaries(x_vec: np.ndarray, params: UnsupervisedParams,
                      sv_samples: np.ndarray):
    """Auxiliaries at which the bound touches the objective.

    Returns (phi, omega) with phi of shape (R, K_b+1, F, N, I, I), where
    phi[r, 0] belongs to the speech term and phi[r, k] to noise component
    k-1, and omega of shape (R, F, N, I, I).  At these settings
    sum_k phi[r, k] is the identity per bin.
    """
    n_kept = sv_samples.shape[0]
    k_b = params.w_b.shape[1]
    n_bins, n_frames, n_ch = x_vec.shape
    phi = np.empty((n_kept, k_b + 1, n_bins, n_frames, n_ch, n_ch),
                   dtype=np.complex128)
    omega = np.empty((n_kept, n_bins, n_frames, n_ch, n_ch),
                     dtype=np.complex128)
    for r in range(n_kept):
        sigma = sigma_x(params, sv_samples[r])
        inv = inverse(sigma)
        omega[r] = sigma
        coeff0 = params.g * sv_samples[r]
        phi[r, 0] = coeff0[..., None, None] * (params.r_s[:, None] @ inv)
        for k in range(k_b):
            coeff = np.outer(params.w_b[:, k], params.h_b[k])
            phi[r, k + 1] = coeff[..., None, None] \
                * (params.r_b[:, None] @ inv)
    return phi, omega


def perturb_auxiliaries(phi: np.ndarray, omega: np.ndarray,
                        rng: np.random.Generator, scale: float = 0.1):
    """Valid but non-optimal auxiliaries.

    Adds zero-sum complex perturbations to phi (so the per-bin sum stays
    the identity) and replaces omega with a random Hermitian PD shift.
    """
    delta = scale * (rng.standard_normal(phi.shape)
                     + 1j * rng.standard_normal(phi.shape))
    delta -= delta.mean(axis=1, keepdims=True)
    n_ch = omega.shape[-1]
    a = rng.standard_normal(omega.shape) + 1j * rng.standard_normal(omega.shape)
    bump = scale * (a @ np.conj(np.swapaxes(a, -1, -2)))
    return phi + delta, hermitize(omega + bump + 1e-3 * np.eye(n_ch))


def mm_bound(x_vec: np.ndarray, params: UnsupervisedParams,
             sv_samples: np.ndarray, phi: np.ndarray,
             omega: np.ndarray) -> float:
    """Value of the majorizer G(theta, phi, omega)."""
    n_bins, n_frames, n_ch = x_vec.shape
    k_b = params.w_b.shape[1]
    r_s_inv = inverse(params.r_s)
    r_b_inv = inverse(params.r_b)
    total = 0.0
    for r in range(sv_samples.shape[0]):
        coeff0 = params.g * sv_samples[r]
        v = np.einsum("fnij,fnj->fni", phi[r, 0], x_vec)
        quad = np.einsum("fni,fij,fnj->fn", np.conj(v), r_s_inv, v).real
        total += float((quad / coeff0).sum())
        for k in range(k_b):
            coeff = np.outer(params.w_b[:, k], params.h_b[k])
            v = np.einsum("fnij,fnj->fni", phi[r, k + 1], x_vec)
            quad = np.einsum("fni,fij,fnj->fn", np.conj(v), r_b_inv, v).real
            total += float((quad / coeff).sum())
        omega_inv = inverse(omega[r])
        tr_s = np.einsum("fnij,fji->fn", omega_inv, params.r_s).real
        tr_b = np.einsum("fnij,fji->fn", omega_inv, params.r_b).real
        noise = params.w_b @ params.h_b
        total += float((coeff0 * tr_s + noise * tr_b
                        + log_det_pd(omega[r])).sum())
        total -= n_ch * n_bins * n_frames
    return total


def direct_cost(x_vec: np.ndarray, params: UnsupervisedParams,
                sv_samples: np.ndarray) -> float:
    """Straightforward per-bin summation of the objective."""
    total = 0.0
    for sv in sv_samples:
        sigma = sigma_x(params, sv)
        for f in range(x_vec.shape[0]):
            for n in range(x_vec.shape[1]):
                s = sigma[f, n]
                xv = x_vec[f, n]
                total += float(
                    (np.conj(xv) @ np.linalg.solve(s, xv)).real
                    + np.log(np.linalg.det(s).real))
    return total


def scalar_wiener_gain(g_n, sv_fn, r_s, w_h_fn, r_b) -> float:
    """Single-channel speech gain."""
    return g_n * sv_fn * r_s / (g_n * sv_fn * r_s + w_h_fn * r_b)


def scalar_m_step(x_abs2, sv, w_b, h_b, g, r_s, r_b):
    """Hand-coded single-channel, single-sample multiplicative updates.

    ``x_abs2`` and ``sv`` are (F, N) arrays; the spatial "matrices" are
    positive scalars.  Returns (w_b, h_b, g) after the three sequential
    updates with the mixture variance refreshed between them.
    """
    def variance(w, h, gain):
        return gain * sv * r_s + (w @ h) * r_b

    var = variance(w_b, h_b, g)
    num = (r_b * x_abs2 / var ** 2) @ h_b.T
    den = (r_b / var) @ h_b.T
    w_b = w_b * np.sqrt(num / den)

    var = variance(w_b, h_b, g)
    num = w_b.T @ (r_b * x_abs2 / var ** 2)
    den = w_b.T @ (r_b / var)
    h_b = h_b * np.sqrt(num / den)

    var = variance(w_b, h_b, g)
    num = (sv * r_s * x_abs2 / var ** 2).sum(axis=0)
    den = (sv * r_s / var).sum(axis=0)
    g = g * np.sqrt(num / den)
    return w_b, h_b, g
