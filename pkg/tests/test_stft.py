"""Analysis/synthesis transform properties."""

import numpy as np
import pytest

from mcenhance.stft import (MultichannelSTFT, StftConfig, analyze,
                            sine_window, synthesize)


def test_config_defaults():
    cfg = StftConfig()
    assert cfg.window_length == 1024
    assert cfg.hop == 256
    assert cfg.n_bins == 513
    assert cfg.overlap_constant == 2.0


def test_config_rejects_bad_hop():
    with pytest.raises(ValueError):
        StftConfig(window_length=1024, hop=300)    # does not divide
    with pytest.raises(ValueError):
        StftConfig(window_length=256, hop=256)     # no overlap


def test_sine_window_overlap_sum_is_exact():
    cfg = StftConfig()
    w = sine_window(cfg.window_length)
    acc = np.zeros(cfg.window_length + 3 * cfg.hop)
    for start in range(0, 4 * cfg.hop, cfg.hop):
        acc[start:start + cfg.window_length] += w ** 2
    middle = acc[cfg.window_length - cfg.hop:cfg.window_length]
    np.testing.assert_allclose(middle, cfg.overlap_constant, rtol=1e-12)


def test_round_trip_random_signals(rng):
    cfg = StftConfig()
    for _ in range(5):
        n = int(rng.integers(cfg.window_length, 20000))
        x = rng.standard_normal((2, n))
        y = synthesize(analyze(x, cfg), cfg)
        assert y.shape == x.shape
        err = np.linalg.norm(y - x) / np.linalg.norm(x)
        assert err < 1e-10


def test_round_trip_non_default_config(rng):
    cfg = StftConfig(window_length=64, hop=8)
    x = rng.standard_normal(700)
    y = synthesize(analyze(x, cfg), cfg)
    err = np.linalg.norm(y - x[None]) / np.linalg.norm(x)
    assert err < 1e-10


def test_analyze_is_linear(rng):
    cfg = StftConfig(window_length=128, hop=32)
    x = rng.standard_normal((1, 2000))
    y = rng.standard_normal((1, 2000))
    lhs = analyze(2.5 * x - 1.5 * y, cfg).data
    rhs = 2.5 * analyze(x, cfg).data - 1.5 * analyze(y, cfg).data
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_zeros_map_to_zeros():
    cfg = StftConfig(window_length=128, hop=32)
    spec = analyze(np.zeros(1000), cfg)
    assert np.all(spec.data == 0)
    assert np.all(synthesize(spec, cfg) == 0)


def test_sinusoid_concentrates_at_its_bin():
    cfg = StftConfig()
    bin_index = 32
    freq = bin_index * cfg.sample_rate / cfg.fft_size
    t = np.arange(3 * cfg.window_length) / cfg.sample_rate
    spec = analyze(np.sin(2 * np.pi * freq * t), cfg)
    frame = np.abs(spec.data[0, :, spec.n_frames // 2]) ** 2
    neighborhood = frame[bin_index - 1:bin_index + 2].sum()
    assert neighborhood / frame.sum() >= 0.99


def test_impulse_reads_off_window():
    cfg = StftConfig(window_length=128, hop=32)
    n = 1000
    pos = 500
    x = np.zeros(n)
    x[pos] = 1.0
    spec = analyze(x, cfg)
    w = sine_window(cfg.window_length)
    # frame m covers padded samples [m*hop, m*hop + window); pick one
    # whose span contains the impulse and check the DC magnitude
    padded_pos = pos + cfg.pad
    m = (padded_pos - cfg.window_length // 2) // cfg.hop
    offset = padded_pos - m * cfg.hop
    np.testing.assert_allclose(np.abs(spec.data[0, 0, m]), w[offset],
                               rtol=1e-10)


def test_analyze_validates_input():
    cfg = StftConfig(window_length=128, hop=32)
    with pytest.raises(ValueError):
        analyze(np.zeros(0), cfg)
    with pytest.raises(ValueError):
        analyze(np.full(1000, np.nan), cfg)
    with pytest.raises(ValueError):
        analyze(np.zeros(64), cfg)    # shorter than the window


def test_synthesize_validates_bins(rng):
    cfg = StftConfig(window_length=128, hop=32)
    spec = analyze(rng.standard_normal(1000), cfg)
    with pytest.raises(ValueError):
        synthesize(spec, StftConfig(window_length=256, hop=64))


def test_synthesize_without_sample_count(rng):
    cfg = StftConfig(window_length=128, hop=32)
    spec = analyze(rng.standard_normal(1056), cfg)   # multiple of hop + pad
    anon = MultichannelSTFT(spec.data)
    out = synthesize(anon, cfg)
    assert out.shape[1] >= 1056 - cfg.hop


def test_multichannel_stft_accessors(rng):
    data = rng.standard_normal((3, 5, 7)) + 0j
    spec = MultichannelSTFT(data)
    assert (spec.n_channels, spec.n_bins, spec.n_frames) == (3, 5, 7)
