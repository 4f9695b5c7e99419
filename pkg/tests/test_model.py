"""Local Gaussian model: covariance assembly, likelihood, normalization."""

import numpy as np
import pytest

from conftest import random_params
from mcenhance.model import (NMF_FLOOR, UnsupervisedParams, init_params,
                             load_params, log_likelihood, noise_psd,
                             normalize, save_params, sigma_x)


def _assemble_by_hand(params, speech_var, f, n):
    coeff_s = params.g[n] * speech_var[f, n]
    coeff_b = (params.w_b @ params.h_b)[f, n]
    return coeff_s * params.r_s[f] + coeff_b * params.r_b[f]


def test_sigma_x_noise_only_identity():
    params = UnsupervisedParams(
        w_b=np.ones((1, 1)), h_b=np.ones((1, 1)), g=np.zeros(1),
        r_s=np.eye(2, dtype=complex)[None], r_b=np.eye(2, dtype=complex)[None])
    out = sigma_x(params, np.ones((1, 1)))
    np.testing.assert_allclose(out[0, 0], np.eye(2))


def test_sigma_x_speech_only_identity():
    params = UnsupervisedParams(
        w_b=np.full((1, 1), NMF_FLOOR), h_b=np.full((1, 1), NMF_FLOOR),
        g=np.ones(1),
        r_s=np.eye(2, dtype=complex)[None], r_b=np.eye(2, dtype=complex)[None])
    out = sigma_x(params, np.ones((1, 1)))
    np.testing.assert_allclose(out[0, 0], np.eye(2), atol=1e-12)


def test_sigma_x_matches_by_hand_assembly(rng):
    params = random_params(rng, n_bins=5, n_frames=4, n_channels=2, k_b=3)
    speech_var = rng.uniform(0.1, 2.0, size=(5, 4))
    out = sigma_x(params, speech_var)
    assert out.shape == (5, 4, 2, 2)
    for f in range(5):
        for n in range(4):
            np.testing.assert_allclose(
                out[f, n], _assemble_by_hand(params, speech_var, f, n),
                rtol=1e-12)


def test_sigma_x_affine_in_gain(rng):
    params = random_params(rng, n_bins=3, n_frames=2, n_channels=2, k_b=2)
    sv = rng.uniform(0.1, 1.0, size=(3, 2))
    zero_g = params.copy()
    zero_g.g[:] = 0.0
    doubled = params.copy()
    doubled.g *= 2.0
    base = sigma_x(zero_g, sv)
    np.testing.assert_allclose(
        sigma_x(doubled, sv) - base, 2.0 * (sigma_x(params, sv) - base),
        rtol=1e-12)


def test_sigma_x_batch_of_samples(rng):
    params = random_params(rng, n_bins=3, n_frames=2, n_channels=2, k_b=2)
    sv = rng.uniform(0.1, 1.0, size=(4, 3, 2))
    out = sigma_x(params, sv)
    assert out.shape == (4, 3, 2, 2, 2)
    for r in range(4):
        np.testing.assert_allclose(out[r], sigma_x(params, sv[r]))


def test_log_likelihood_zero_observation():
    x = np.zeros(3, dtype=complex)
    val = log_likelihood(x, np.eye(3, dtype=complex))
    np.testing.assert_allclose(val, -3.0 * np.log(np.pi))


def test_log_likelihood_scalar_case():
    sig = 0.7
    x = np.array([np.sqrt(sig) * np.exp(0.3j)])
    val = log_likelihood(x, np.array([[sig + 0j]]))
    np.testing.assert_allclose(val, -np.log(np.pi) - np.log(sig) - 1.0)


def test_log_likelihood_matches_direct_evaluation(rng):
    from conftest import random_pd
    for _ in range(20):
        sigma = random_pd(rng, 2)
        x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        expected = (-2.0 * np.log(np.pi)
                    - np.log(np.linalg.det(sigma).real)
                    - (x.conj() @ np.linalg.solve(sigma, x)).real)
        np.testing.assert_allclose(log_likelihood(x, sigma), expected,
                                   rtol=1e-10)


def test_log_likelihood_batched(rng):
    from conftest import random_pd_stack
    sigma = random_pd_stack(rng, (3, 4), 2)
    x = rng.standard_normal((3, 4, 2)) + 1j * rng.standard_normal((3, 4, 2))
    out = log_likelihood(x, sigma)
    assert out.shape == (3, 4)
    np.testing.assert_allclose(out[1, 2], log_likelihood(x[1, 2], sigma[1, 2]))


def test_normalize_is_fixed_point(rng):
    params = random_params(rng, n_bins=4, n_frames=3, n_channels=2, k_b=2)
    once = normalize(params.copy())
    twice = normalize(once.copy())
    np.testing.assert_allclose(twice.w_b, once.w_b, atol=1e-12)
    np.testing.assert_allclose(twice.h_b, once.h_b, atol=1e-12)
    np.testing.assert_allclose(twice.r_b, once.r_b, atol=1e-12)


def test_normalize_scale_transfer():
    params = UnsupervisedParams(
        w_b=np.full((2, 1), 0.5), h_b=np.full((1, 3), 0.25),
        g=np.ones(3),
        r_s=np.stack([np.eye(2, dtype=complex)] * 2),
        r_b=np.stack([2.0 * np.eye(2, dtype=complex)] * 2))
    before = noise_psd(params)[..., None, None] * params.r_b[:, None]
    out = normalize(params.copy())
    np.testing.assert_allclose(np.trace(out.r_b, axis1=-2, axis2=-1), 1.0)
    after = noise_psd(out)[..., None, None] * out.r_b[:, None]
    np.testing.assert_allclose(after, before, rtol=1e-12)


def test_normalize_leaves_sigma_x_invariant(rng):
    params = random_params(rng, n_bins=4, n_frames=3, n_channels=2, k_b=3)
    sv = rng.uniform(0.1, 2.0, size=(4, 3))
    before = sigma_x(params, sv)
    out = normalize(params.copy())
    np.testing.assert_allclose(sigma_x(out, sv), before, rtol=1e-10)
    np.testing.assert_allclose(out.w_b.sum(axis=0), 1.0, rtol=1e-12)


def test_normalize_applies_floors():
    params = UnsupervisedParams(
        w_b=np.array([[0.0], [1.0]]), h_b=np.array([[0.0, 1.0]]),
        g=np.zeros(2),
        r_s=np.stack([np.eye(2, dtype=complex)] * 2),
        r_b=np.stack([np.eye(2, dtype=complex)] * 2))
    out = normalize(params)
    assert np.all(out.w_b >= NMF_FLOOR)
    assert np.all(out.h_b >= NMF_FLOOR)
    assert np.all(out.g >= NMF_FLOOR)


def test_init_params_shapes_and_ranges(rng):
    params = init_params(n_bins=6, n_frames=5, n_channels=2,
                         n_noise_components=3, rng=rng)
    assert params.w_b.shape == (6, 3)
    assert params.h_b.shape == (3, 5)
    assert np.all((params.w_b >= 0.1) & (params.w_b <= 1.0))
    assert np.all((params.h_b >= 0.1) & (params.h_b <= 1.0))
    np.testing.assert_array_equal(params.g, np.ones(5))
    np.testing.assert_array_equal(params.r_s,
                                  np.stack([np.eye(2, dtype=complex)] * 6))
    assert params.n_bins == 6 and params.n_frames == 5
    assert params.n_channels == 2


def test_params_json_round_trip(tmp_path, rng):
    params = random_params(rng, n_bins=3, n_frames=2, n_channels=2, k_b=2)
    path = tmp_path / "params.json"
    save_params(path, params)
    loaded = load_params(path)
    np.testing.assert_allclose(loaded.w_b, params.w_b)
    np.testing.assert_allclose(loaded.h_b, params.h_b)
    np.testing.assert_allclose(loaded.g, params.g)
    np.testing.assert_allclose(loaded.r_s, params.r_s)
    np.testing.assert_allclose(loaded.r_b, params.r_b)
    assert np.iscomplexobj(loaded.r_s)


def test_load_params_rejects_missing_field(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"w_b": [[1.0]]}')
    with pytest.raises((KeyError, ValueError)):
        load_params(path)
