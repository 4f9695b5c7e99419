"""Variational objective: Itakura-Saito reconstruction plus prior KL."""

from __future__ import annotations

import torch

from .nets import LOG_FLOOR


class DivergentLossError(RuntimeError):
    """The objective became non-finite; training cannot continue."""


def compute_elbo(power, decoder, encoder, eps=None, generator=None):
    """Evidence lower bound of a batch of power spectra, as a scalar.

    The bound is ``-mean_n [ sum_f d_IS(p_fn; sigma_f^2(z_n)) + KL_n ]``
    where ``d_IS(a; b) = a/b - log(a/b) - 1`` is the Itakura-Saito
    divergence, ``z_n`` is one reparametrized posterior sample
    ``mu_n + sigma_n * eps_n``, and ``KL_n`` is the divergence from the
    posterior to the standard normal prior.  Constants independent of
    the networks are dropped, so the bound is at most zero and equals
    zero exactly when the decoder reproduces the batch and the
    posterior matches the prior.

    ``eps`` fixes the latent noise (for gradient checks and oracles);
    otherwise one sample per frame is drawn from ``generator``.
    """
    x = torch.as_tensor(power, dtype=torch.float64)
    if x.dim() != 2:
        raise ValueError("power must be a (batch, bins) array")
    if torch.any(x < 0):
        raise ValueError("power spectra must be nonnegative")
    mu, log_var = encoder(x)
    if eps is None:
        eps = torch.randn(mu.shape, dtype=torch.float64,
                          generator=generator)
    else:
        eps = torch.as_tensor(eps, dtype=torch.float64)
        if eps.shape != mu.shape:
            raise ValueError("eps shape must match the posterior mean")
    z = mu + torch.exp(0.5 * log_var) * eps
    ratio = (x + LOG_FLOOR) / torch.exp(decoder(z))
    reconstruction = torch.sum(ratio - torch.log(ratio) - 1.0, dim=1)
    kl = 0.5 * torch.sum(mu ** 2 + torch.exp(log_var) - log_var - 1.0,
                         dim=1)
    elbo = -(reconstruction + kl).mean()
    if not torch.isfinite(elbo):
        bad = int(torch.nonzero(~torch.isfinite(reconstruction + kl))[0])
        raise DivergentLossError(
            f"non-finite objective (first bad frame {bad}: "
            f"reconstruction {float(reconstruction[bad].detach())}, "
            f"kl {float(kl[bad].detach())})")
    return elbo
