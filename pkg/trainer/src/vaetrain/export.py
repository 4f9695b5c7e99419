"""Weight export in the shared binary container format.

The enhancement engine and this trainer are separate programs coupled
only by this file format::

    bytes 0..3    magic b"MTC1"
    bytes 4..7    manifest length (uint32, little-endian)
    ...           manifest (UTF-8 JSON, keys sorted); "tensors" lists
                  {"name", "shape"} descriptors
    ...           tensor payloads, little-endian float32, row-major,
                  in manifest order

The manifest carries a "networks" list of sections, one per role
("decoder", "encoder"), naming tensors "<role>/layer<i>/weight|bias"
plus optional "<role>/standardization/mean|std".

This module also provides the trainer's inference-mode forward passes:
float64 arithmetic on the float32 tensors exactly as exported, with the
same variance clamps the engine applies.  They define what "the same
network" means across the two programs.
"""

from __future__ import annotations

import json

import numpy as np

from .nets import LOG_FLOOR, LOG_VAR_MAX, VAR_FLOOR
from .train import TrainResult

MAGIC = b"MTC1"
_VERSION = 1


def _stack_layers(module) -> list[dict]:
    last = len(module.stack) - 1
    return [{
        "weight": linear.weight.detach().numpy().astype(np.float32),
        "bias": linear.bias.detach().numpy().astype(np.float32),
        "activation": "relu" if idx < last else "identity",
    } for idx, linear in enumerate(module.stack)]


def exported_networks(result: TrainResult) -> dict:
    """Float32 tensors exactly as they will appear in the file."""
    return {
        "decoder": {
            "layers": _stack_layers(result.decoder),
            "latent_dim": result.latent_dim,
            "spectrum_dim": result.spectrum_dim,
            "standardization": None,
        },
        "encoder": {
            "layers": _stack_layers(result.encoder),
            "latent_dim": result.latent_dim,
            "spectrum_dim": result.spectrum_dim,
            "standardization": (
                np.asarray(result.feature_mean, dtype=np.float32),
                np.asarray(result.feature_std, dtype=np.float32)),
        },
    }


def export_weights(path, result: TrainResult) -> None:
    """Write the decoder/encoder pair as one weight bundle."""
    sections = []
    tensors: dict[str, np.ndarray] = {}
    for role, net in exported_networks(result).items():
        layer_descs = []
        for idx, layer in enumerate(net["layers"]):
            layer_descs.append({"activation": layer["activation"],
                                "batch_norm": False, "epsilon": None})
            tensors[f"{role}/layer{idx}/weight"] = layer["weight"]
            tensors[f"{role}/layer{idx}/bias"] = layer["bias"]
        if net["standardization"] is not None:
            mean, std = net["standardization"]
            tensors[f"{role}/standardization/mean"] = mean
            tensors[f"{role}/standardization/std"] = std
        sections.append({
            "role": role,
            "latent_dim": net["latent_dim"],
            "spectrum_dim": net["spectrum_dim"],
            "layers": layer_descs,
            "standardization": net["standardization"] is not None,
        })
    manifest = {
        "type": "network_bundle",
        "version": _VERSION,
        "networks": sections,
        "tensors": [{"name": name, "shape": list(arr.shape)}
                    for name, arr in tensors.items()],
    }
    header = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.uint32(len(header)).tobytes())
        fh.write(header)
        for arr in tensors.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def _forward(layers: list[dict], x: np.ndarray) -> np.ndarray:
    h = x
    for layer in layers:
        h = h @ layer["weight"].astype(np.float64).T \
            + layer["bias"].astype(np.float64)
        if layer["activation"] == "relu":
            h = np.maximum(h, 0.0)
    return h


def decoder_inference(net: dict, z) -> np.ndarray:
    """Inference-mode speech variances for latent rows ``z``."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    log_var = np.minimum(_forward(net["layers"], z), LOG_VAR_MAX)
    return np.maximum(np.exp(log_var), VAR_FLOOR)


def encoder_inference(net: dict, power) -> tuple[np.ndarray, np.ndarray]:
    """Inference-mode posterior ``(mu, var)`` for power-spectrum rows."""
    p = np.atleast_2d(np.asarray(power, dtype=np.float64))
    mean, std = net["standardization"]
    feat = (np.log(p + LOG_FLOOR) - mean.astype(np.float64)) \
        / std.astype(np.float64)
    out = _forward(net["layers"], feat)
    latent = net["latent_dim"]
    var = np.maximum(np.exp(np.minimum(out[:, latent:], LOG_VAR_MAX)),
                     VAR_FLOOR)
    return out[:, :latent], var
