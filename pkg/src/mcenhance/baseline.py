"""Supervised-NMF baseline inside the same multichannel Gaussian framework.

The speech variance model is a conventional NMF (W_s H_s) with W_s learned
offline on clean speech and frozen at test time; the noise side is
identical to the main model.  There is no latent variable and no gain
vector (H_s absorbs the scale), so the EM loop degenerates to deterministic
majorization-minimization sweeps followed by a single Wiener filtering
pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .container import ContainerFormatError, read_container, write_container
from .linalg import inverse, solve_riccati
from .mcem import _sample_cost, _stats_pass, _x_vectors
from .model import NMF_FLOOR, UnsupervisedParams, noise_psd, normalize, sigma_x
from .stft import MultichannelSTFT, StftConfig, synthesize
from .wiener import EnhancementResult

__all__ = [
    "SpeechDictionary",
    "BaselineParams",
    "DictionaryFormatError",
    "is_nmf",
    "pretrain_dictionary",
    "baseline_cost",
    "baseline_m_step",
    "baseline_m_step_updates",
    "baseline_wiener",
    "run_baseline",
    "save_dictionary",
    "load_dictionary",
]


class DictionaryFormatError(ContainerFormatError):
    """Dictionary file fails validation."""


@dataclass(frozen=True)
class SpeechDictionary:
    """Frozen speech spectral dictionary; columns of w_s sum to 1."""

    w_s: np.ndarray           # (F, K_s) nonneg

    @property
    def n_bins(self) -> int:
        return self.w_s.shape[0]

    @property
    def n_components(self) -> int:
        return self.w_s.shape[1]


@dataclass
class BaselineParams:
    """Test-time parameters: H_s plus the shared noise-side parameters."""

    h_s: np.ndarray           # (K_s, N) nonneg
    w_b: np.ndarray
    h_b: np.ndarray
    r_s: np.ndarray
    r_b: np.ndarray

    def as_unsupervised(self) -> UnsupervisedParams:
        """View with unit gains, for reuse of the shared covariance code."""
        return UnsupervisedParams(
            w_b=self.w_b, h_b=self.h_b, g=np.ones(self.h_b.shape[1]),
            r_s=self.r_s, r_b=self.r_b)


def _is_divergence(v: np.ndarray, vhat: np.ndarray) -> float:
    ratio = v / vhat
    return float((ratio - np.log(ratio) - 1.0).sum())


def is_nmf(v, n_components: int, iterations: int = 500,
           rng: np.random.Generator | None = None,
           tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Itakura-Saito NMF of a positive (F, T) matrix.

    Multiplicative majorization-minimization updates with exponent 1/2
    (monotone for this divergence); W is column-normalized every iteration
    with the scale moved into H.  Stops early when the relative cost change
    drops below ``tol``.  Returns (W, H, per-iteration costs).
    """
    v = np.maximum(np.asarray(v, dtype=np.float64), NMF_FLOOR)
    if v.ndim != 2 or v.size == 0:
        raise ValueError("need a nonempty (F, T) matrix")
    if rng is None:
        rng = np.random.default_rng(0)
    n_bins, n_cols = v.shape
    w = rng.uniform(0.1, 1.0, size=(n_bins, n_components))
    h = rng.uniform(0.1, 1.0, size=(n_components, n_cols))
    costs = []
    for _ in range(iterations):
        vhat = np.maximum(w @ h, NMF_FLOOR)
        w *= np.sqrt(((v / vhat ** 2) @ h.T) / ((1.0 / vhat) @ h.T))
        w = np.maximum(w, NMF_FLOOR)
        col = w.sum(axis=0)
        w /= col
        h *= col[:, None]
        vhat = np.maximum(w @ h, NMF_FLOOR)
        h *= np.sqrt((w.T @ (v / vhat ** 2)) / (w.T @ (1.0 / vhat)))
        h = np.maximum(h, NMF_FLOOR)
        costs.append(_is_divergence(v, np.maximum(w @ h, NMF_FLOOR)))
        if len(costs) >= 2:
            prev, cur = costs[-2], costs[-1]
            if abs(prev - cur) <= tol * max(abs(prev), 1e-30):
                break
    return w, h, costs


def pretrain_dictionary(spectra, n_components: int, iterations: int = 500,
                        rng: np.random.Generator | None = None,
                        tol: float = 1e-6) -> SpeechDictionary:
    """Learn the frozen dictionary from clean-speech power spectra.

    ``spectra`` is one (F, T) array or a sequence of (F, T_i) arrays that
    get concatenated along time.
    """
    if isinstance(spectra, np.ndarray):
        mats = [spectra]
    else:
        mats = [np.asarray(s, dtype=np.float64) for s in spectra]
    if not mats or any(m.size == 0 for m in mats):
        raise ValueError("empty training corpus")
    v = np.concatenate(mats, axis=1)
    if np.any(v < 0):
        raise ValueError("power spectra must be nonnegative")
    w, _, _ = is_nmf(v, n_components, iterations=iterations, rng=rng, tol=tol)
    return SpeechDictionary(w_s=w)


def _speech_psd(dictionary: SpeechDictionary,
                params: BaselineParams) -> np.ndarray:
    return dictionary.w_s @ params.h_s


def baseline_cost(x, dictionary: SpeechDictionary,
                  params: BaselineParams) -> float:
    """Exact objective sum_fn [x^H Sigma^{-1} x + ln det Sigma]."""
    sv = _speech_psd(dictionary, params)
    return _sample_cost(_x_vectors(x), params.as_unsupervised(), sv[None])


def init_baseline_params(dictionary: SpeechDictionary, n_frames: int,
                         n_channels: int, n_noise_components: int,
                         rng: np.random.Generator) -> BaselineParams:
    n_bins = dictionary.n_bins
    eye = np.broadcast_to(np.eye(n_channels, dtype=np.complex128),
                          (n_bins, n_channels, n_channels)).copy()
    return BaselineParams(
        h_s=rng.uniform(0.1, 1.0, size=(dictionary.n_components, n_frames)),
        w_b=rng.uniform(0.1, 1.0, size=(n_bins, n_noise_components)),
        h_b=rng.uniform(0.1, 1.0, size=(n_noise_components, n_frames)),
        r_s=eye,
        r_b=eye.copy(),
    )


def _copy_params(params: BaselineParams) -> BaselineParams:
    return BaselineParams(h_s=params.h_s.copy(), w_b=params.w_b.copy(),
                          h_b=params.h_b.copy(), r_s=params.r_s.copy(),
                          r_b=params.r_b.copy())


def baseline_m_step_updates(x, dictionary: SpeechDictionary,
                            params: BaselineParams):
    """Yield (name, params) after each sub-update, in order
    "h_s", "w_b", "h_b", "r_s", "r_b".

    Identical structure to the main M-step with the speech variance
    (W_s H_s) in place of the sampled decoder variances, unit gain, and a
    single deterministic "sample"; each sub-update refreshes Sigma_x and
    is individually non-increasing in the exact objective.
    """
    x_vec = _x_vectors(x)
    w_s = dictionary.w_s
    p = _copy_params(params)

    tm, ts = _stats_pass(x_vec, p.as_unsupervised(),
                         _speech_psd(dictionary, p)[None], trace_with=p.r_s)
    p.h_s = np.maximum(p.h_s * np.sqrt((w_s.T @ tm) / (w_s.T @ ts)),
                       NMF_FLOOR)
    yield "h_s", _copy_params(p)

    tm, ts = _stats_pass(x_vec, p.as_unsupervised(),
                         _speech_psd(dictionary, p)[None], trace_with=p.r_b)
    p.w_b = np.maximum(p.w_b * np.sqrt((tm @ p.h_b.T) / (ts @ p.h_b.T)),
                       NMF_FLOOR)
    yield "w_b", _copy_params(p)

    tm, ts = _stats_pass(x_vec, p.as_unsupervised(),
                         _speech_psd(dictionary, p)[None], trace_with=p.r_b)
    p.h_b = np.maximum(p.h_b * np.sqrt((p.w_b.T @ tm) / (p.w_b.T @ ts)),
                       NMF_FLOOR)
    yield "h_b", _copy_params(p)

    sv = _speech_psd(dictionary, p)
    psi, bmat = _stats_pass(x_vec, p.as_unsupervised(), sv[None],
                            riccati_for=(p.r_s, sv))
    p.r_s = solve_riccati(psi, p.r_s @ bmat @ p.r_s)
    yield "r_s", _copy_params(p)

    psi, bmat = _stats_pass(x_vec, p.as_unsupervised(),
                            _speech_psd(dictionary, p)[None],
                            riccati_for=(p.r_b, p.w_b @ p.h_b))
    p.r_b = solve_riccati(psi, p.r_b @ bmat @ p.r_b)
    yield "r_b", _copy_params(p)


def baseline_m_step(x, dictionary: SpeechDictionary,
                    params: BaselineParams) -> BaselineParams:
    """One sweep of the five sub-updates, then normalization and floors."""
    p = params
    for _, p in baseline_m_step_updates(x, dictionary, params):
        pass
    u = normalize(p.as_unsupervised())
    return BaselineParams(h_s=np.maximum(p.h_s, NMF_FLOOR), w_b=u.w_b,
                          h_b=u.h_b, r_s=p.r_s, r_b=u.r_b)


def baseline_wiener(x: MultichannelSTFT, dictionary: SpeechDictionary,
                    params: BaselineParams,
                    stft_cfg: StftConfig) -> EnhancementResult:
    """Deterministic Wiener filtering with gain (W_s H_s) R_s Sigma^{-1}."""
    x_vec = _x_vectors(x)
    sv = _speech_psd(dictionary, params)
    inv = inverse(sigma_x(params.as_unsupervised(), sv))
    gain = sv[..., None, None] * (params.r_s[:, None] @ inv)
    speech_vec = np.einsum("fnij,fnj->fni", gain, x_vec)
    noise_vec = x_vec - speech_vec
    speech = MultichannelSTFT(np.moveaxis(speech_vec, -1, 0),
                              n_samples=x.n_samples)
    noise = MultichannelSTFT(np.moveaxis(noise_vec, -1, 0),
                             n_samples=x.n_samples)
    return EnhancementResult(
        speech_stft=speech, noise_stft=noise,
        speech_wav=synthesize(speech, stft_cfg),
        noise_wav=synthesize(noise, stft_cfg))


def run_baseline(x: MultichannelSTFT, dictionary: SpeechDictionary,
                 iterations: int = 50,
                 n_noise_components: int = 10,
                 rng: np.random.Generator | None = None,
                 stft_cfg: StftConfig | None = None,
                 callback=None) -> tuple[BaselineParams, EnhancementResult]:
    """Fit the baseline and reconstruct speech/noise estimates.

    No sampling is involved.  ``stft_cfg`` drives waveform synthesis
    (defaults used when omitted).  ``callback`` receives
    {"iteration", "cost"} per sweep.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if stft_cfg is None:
        stft_cfg = StftConfig()
    n_ch, n_bins, n_frames = x.data.shape
    if n_bins != dictionary.n_bins:
        raise ValueError(
            f"STFT has {n_bins} bins but the dictionary expects "
            f"{dictionary.n_bins}")
    params = init_baseline_params(dictionary, n_frames, n_ch,
                                  n_noise_components, rng)
    for iteration in range(iterations):
        params = baseline_m_step(x, dictionary, params)
        if callback is not None:
            callback({"iteration": iteration,
                      "cost": baseline_cost(x, dictionary, params)})
    return params, baseline_wiener(x, dictionary, params, stft_cfg)


def save_dictionary(path, dictionary: SpeechDictionary) -> None:
    write_container(path, {
        "type": "nmf_dictionary",
        "n_bins": dictionary.n_bins,
        "n_components": dictionary.n_components,
    }, {"w_s": np.asarray(dictionary.w_s, dtype=np.float32)})


def load_dictionary(path) -> SpeechDictionary:
    try:
        manifest, tensors = read_container(path)
    except ContainerFormatError as exc:
        raise DictionaryFormatError(str(exc)) from exc
    if manifest.get("type") != "nmf_dictionary":
        raise DictionaryFormatError(
            f"{path}: container type {manifest.get('type')!r} is not a "
            "dictionary")
    w_s = tensors.get("w_s")
    if w_s is None:
        raise DictionaryFormatError(f"{path}: missing tensor w_s")
    expected = (int(manifest["n_bins"]), int(manifest["n_components"]))
    if w_s.shape != expected:
        raise DictionaryFormatError(
            f"{path}: w_s shape {w_s.shape} does not match manifest "
            f"{expected}")
    if not np.all(np.isfinite(w_s)) or np.any(w_s < 0):
        raise DictionaryFormatError(f"{path}: invalid dictionary entries")
    return SpeechDictionary(w_s=np.asarray(w_s, dtype=np.float64))
