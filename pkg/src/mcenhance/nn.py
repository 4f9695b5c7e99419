"""Inference-only runtime for the trained spectrum networks.

Two feed-forward networks drive the enhancer: a *decoder* mapping a latent
vector to per-bin log-variances of the speech spectrum, and an *encoder*
mapping a power spectrum to the mean and log-variance of an L-dimensional
Gaussian over the latent space.  Both are plain affine stacks with optional
batch normalization (inference form: a fixed affine map from frozen running
statistics) between the affine map and the activation.

Weights are stored as float32 exactly as serialized; forward passes compute
in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .container import ContainerFormatError, read_container, write_container

__all__ = [
    "VAR_FLOOR",
    "LOG_FLOOR",
    "BatchNorm",
    "Layer",
    "Standardization",
    "NetworkWeights",
    "WeightFormatError",
    "CorruptWeightsError",
    "decoder_forward",
    "encoder_forward",
    "save_weights",
    "load_weights",
]

VAR_FLOOR = 1e-10     # lower bound on decoder variances
LOG_FLOOR = 1e-12     # additive floor before taking log of power spectra
_LOG_VAR_MAX = 80.0   # keeps exp() finite for extreme latent inputs

_ACTIVATIONS = ("relu", "identity")


class WeightFormatError(ContainerFormatError):
    """Weight file fails validation (magic, shapes, finiteness)."""


class CorruptWeightsError(RuntimeError):
    """A forward pass produced non-finite values."""


@dataclass(frozen=True)
class BatchNorm:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    epsilon: float = 1e-3


@dataclass(frozen=True)
class Layer:
    weight: np.ndarray        # (out, in) float32
    bias: np.ndarray          # (out,) float32
    activation: str = "identity"
    batch_norm: BatchNorm | None = None


@dataclass(frozen=True)
class Standardization:
    mean: np.ndarray          # (n_bins,) float32
    std: np.ndarray


@dataclass(frozen=True)
class NetworkWeights:
    """One network plus the metadata needed to run it.

    ``latent_dim`` and ``spectrum_dim`` fix the expected interface: a
    decoder maps latent_dim -> spectrum_dim, an encoder maps
    spectrum_dim -> 2 * latent_dim.
    """

    layers: tuple[Layer, ...]
    latent_dim: int
    spectrum_dim: int
    input_standardization: Standardization | None = None

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[0]


def validate_network(w: NetworkWeights, name: str = "network") -> None:
    """Check the layer shape chain and tensor sanity; raises WeightFormatError."""
    if not w.layers:
        raise WeightFormatError(f"{name}: no layers")
    prev = w.layers[0].weight.shape[1]
    for idx, layer in enumerate(w.layers):
        out_dim, in_dim = layer.weight.shape
        if in_dim != prev:
            raise WeightFormatError(
                f"{name}: layer {idx} expects input {in_dim}, got {prev} "
                "from the previous layer"
            )
        if layer.bias.shape != (out_dim,):
            raise WeightFormatError(f"{name}: layer {idx} bias shape mismatch")
        if layer.activation not in _ACTIVATIONS:
            raise WeightFormatError(
                f"{name}: layer {idx} unknown activation {layer.activation!r}"
            )
        bn = layer.batch_norm
        if bn is not None:
            for field in ("gamma", "beta", "running_mean", "running_var"):
                if getattr(bn, field).shape != (out_dim,):
                    raise WeightFormatError(
                        f"{name}: layer {idx} batch-norm {field} shape mismatch"
                    )
            if np.any(bn.running_var <= 0):
                raise WeightFormatError(
                    f"{name}: layer {idx} non-positive running variance"
                )
        for arr in _layer_tensors(layer).values():
            if not np.all(np.isfinite(arr)):
                raise WeightFormatError(f"{name}: layer {idx} non-finite tensor")
        prev = out_dim
    std = w.input_standardization
    if std is not None:
        if std.mean.shape != (w.spectrum_dim,) or std.std.shape != (w.spectrum_dim,):
            raise WeightFormatError(f"{name}: standardization stats shape mismatch")
        if np.any(std.std <= 0):
            raise WeightFormatError(f"{name}: non-positive standardization std")


def _forward(w: NetworkWeights, x: np.ndarray) -> np.ndarray:
    """Run the affine stack on (n, input_dim) float64 rows."""
    h = x
    for layer in w.layers:
        h = h @ layer.weight.astype(np.float64).T + layer.bias.astype(np.float64)
        bn = layer.batch_norm
        if bn is not None:
            scale = bn.gamma.astype(np.float64) / np.sqrt(
                bn.running_var.astype(np.float64) + bn.epsilon)
            h = scale * (h - bn.running_mean.astype(np.float64)) \
                + bn.beta.astype(np.float64)
        if layer.activation == "relu":
            h = np.maximum(h, 0.0)
    if not np.all(np.isfinite(h)):
        raise CorruptWeightsError("network produced non-finite output")
    return h


def decoder_forward(w: NetworkWeights, z) -> np.ndarray:
    """Speech variance spectrum for latent vectors ``z``.

    ``z`` may be a single ``(latent_dim,)`` vector or a batch
    ``(..., latent_dim)``; the output has shape ``(..., spectrum_dim)`` and
    is strictly positive (exp of the network output, floored at VAR_FLOOR).
    """
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != w.latent_dim or w.input_dim != w.latent_dim:
        raise ValueError(
            f"decoder expects latent dim {w.latent_dim}, got {z.shape[-1]}"
        )
    if w.output_dim != w.spectrum_dim:
        raise ValueError("weights do not describe a decoder")
    flat = z.reshape(-1, w.latent_dim)
    log_var = np.minimum(_forward(w, flat), _LOG_VAR_MAX)
    var = np.maximum(np.exp(log_var), VAR_FLOOR)
    return var.reshape(*z.shape[:-1], w.spectrum_dim)


def encoder_forward(w: NetworkWeights, power_spectrum) -> tuple[np.ndarray, np.ndarray]:
    """Latent posterior parameters ``(mu, var)`` for power spectra.

    Input is a ``(spectrum_dim,)`` vector or ``(..., spectrum_dim)`` batch of
    nonnegative per-bin powers.  Preprocessing takes the log (floored at
    LOG_FLOOR) and applies the stored frequency-wise standardization.
    """
    p = np.asarray(power_spectrum, dtype=np.float64)
    if np.any(p < 0):
        raise ValueError("power spectrum must be nonnegative")
    if p.shape[-1] != w.spectrum_dim or w.input_dim != w.spectrum_dim:
        raise ValueError(
            f"encoder expects spectrum dim {w.spectrum_dim}, got {p.shape[-1]}"
        )
    if w.output_dim != 2 * w.latent_dim:
        raise ValueError("weights do not describe an encoder")
    feat = np.log(p + LOG_FLOOR)
    std = w.input_standardization
    if std is not None:
        feat = (feat - std.mean.astype(np.float64)) / std.std.astype(np.float64)
    flat = np.atleast_2d(feat.reshape(-1, w.spectrum_dim))
    out = _forward(w, flat).reshape(*p.shape[:-1], 2 * w.latent_dim)
    mu = out[..., :w.latent_dim]
    var = np.maximum(np.exp(np.minimum(out[..., w.latent_dim:], _LOG_VAR_MAX)),
                     VAR_FLOOR)
    return mu, var


def _layer_tensors(layer: Layer) -> dict[str, np.ndarray]:
    t = {"weight": layer.weight, "bias": layer.bias}
    if layer.batch_norm is not None:
        bn = layer.batch_norm
        t.update(bn_gamma=bn.gamma, bn_beta=bn.beta,
                 bn_mean=bn.running_mean, bn_var=bn.running_var)
    return t


def save_weights(path, networks: dict[str, NetworkWeights]) -> None:
    """Serialize named networks (e.g. "decoder", "encoder") into one file."""
    sections = []
    tensors: dict[str, np.ndarray] = {}
    for role, w in networks.items():
        validate_network(w, role)
        layer_descs = []
        for idx, layer in enumerate(w.layers):
            layer_descs.append({
                "activation": layer.activation,
                "batch_norm": layer.batch_norm is not None,
                "epsilon": (layer.batch_norm.epsilon
                            if layer.batch_norm is not None else None),
            })
            for name, arr in _layer_tensors(layer).items():
                tensors[f"{role}/layer{idx}/{name}"] = np.asarray(arr, dtype=np.float32)
        if w.input_standardization is not None:
            tensors[f"{role}/standardization/mean"] = np.asarray(
                w.input_standardization.mean, dtype=np.float32)
            tensors[f"{role}/standardization/std"] = np.asarray(
                w.input_standardization.std, dtype=np.float32)
        sections.append({
            "role": role,
            "latent_dim": w.latent_dim,
            "spectrum_dim": w.spectrum_dim,
            "layers": layer_descs,
            "standardization": w.input_standardization is not None,
        })
    write_container(path, {"type": "network_bundle", "networks": sections}, tensors)


def load_weights(path) -> dict[str, NetworkWeights]:
    """Load a weight bundle; inverse of :func:`save_weights`.

    Raises WeightFormatError on bad magic/version, missing or misshapen
    tensors, broken layer shape chains, or non-finite entries.
    """
    try:
        manifest, tensors = read_container(path)
    except ContainerFormatError as exc:
        raise WeightFormatError(str(exc)) from exc
    if manifest.get("type") != "network_bundle":
        raise WeightFormatError(
            f"{path}: container type {manifest.get('type')!r} is not a weight bundle"
        )
    networks: dict[str, NetworkWeights] = {}
    for section in manifest.get("networks", []):
        role = section["role"]
        layers = []
        for idx, desc in enumerate(section["layers"]):
            try:
                weight = tensors[f"{role}/layer{idx}/weight"]
                bias = tensors[f"{role}/layer{idx}/bias"]
            except KeyError as exc:
                raise WeightFormatError(
                    f"{path}: {role} layer {idx} missing tensor {exc}"
                ) from exc
            bn = None
            if desc["batch_norm"]:
                bn = BatchNorm(
                    gamma=tensors[f"{role}/layer{idx}/bn_gamma"],
                    beta=tensors[f"{role}/layer{idx}/bn_beta"],
                    running_mean=tensors[f"{role}/layer{idx}/bn_mean"],
                    running_var=tensors[f"{role}/layer{idx}/bn_var"],
                    epsilon=float(desc["epsilon"]),
                )
            layers.append(Layer(weight=weight, bias=bias,
                                activation=desc["activation"], batch_norm=bn))
        std = None
        if section["standardization"]:
            std = Standardization(
                mean=tensors[f"{role}/standardization/mean"],
                std=tensors[f"{role}/standardization/std"],
            )
        w = NetworkWeights(
            layers=tuple(layers),
            latent_dim=int(section["latent_dim"]),
            spectrum_dim=int(section["spectrum_dim"]),
            input_standardization=std,
        )
        validate_network(w, role)
        networks[role] = w
    return networks
