"""Scale-invariant SDR evaluation and report emission."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SI_SDR_CAP",
    "EvalReport",
    "per_channel_si_sdr",
    "si_sdr",
    "evaluate_enhancement",
    "aggregate",
    "write_report_json",
    "write_reports_csv",
]

SI_SDR_CAP = 60.0   # dB clamp for numerically zero residual or target


def per_channel_si_sdr(reference, estimate) -> np.ndarray:
    """SI-SDR in dB for each channel.

    The estimate is projected onto the reference; the ratio of projected
    energy to residual energy gives the score.  Values are clamped to
    [-SI_SDR_CAP, +SI_SDR_CAP] to keep the zero-residual and orthogonal
    cases finite.
    """
    ref = np.atleast_2d(np.asarray(reference, dtype=np.float64))
    est = np.atleast_2d(np.asarray(estimate, dtype=np.float64))
    if ref.shape != est.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {est.shape}")
    ref_power = (ref * ref).sum(axis=1)
    if np.any(ref_power == 0.0):
        raise ValueError("reference has a silent channel")
    alpha = (est * ref).sum(axis=1) / ref_power
    target = alpha[:, None] * ref
    residual = est - target
    target_power = (target * target).sum(axis=1)
    residual_power = (residual * residual).sum(axis=1)
    out = np.empty(ref.shape[0])
    for i in range(ref.shape[0]):
        if residual_power[i] == 0.0:
            out[i] = SI_SDR_CAP
        elif target_power[i] == 0.0:
            out[i] = -SI_SDR_CAP
        else:
            ratio = 10.0 * np.log10(target_power[i] / residual_power[i])
            out[i] = min(max(ratio, -SI_SDR_CAP), SI_SDR_CAP)
    return out


def si_sdr(reference, estimate) -> float:
    """Multichannel SI-SDR: mean of the per-channel scores, in dB."""
    return float(per_channel_si_sdr(reference, estimate).mean())


@dataclass(frozen=True)
class EvalReport:
    """Before/after scores for one mixture."""

    si_sdr_in: float
    si_sdr_out: float
    improvement: float
    per_channel_in: tuple[float, ...]
    per_channel_out: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "si_sdr_in": self.si_sdr_in,
            "si_sdr_out": self.si_sdr_out,
            "improvement": self.improvement,
            "per_channel_in": list(self.per_channel_in),
            "per_channel_out": list(self.per_channel_out),
        }


def evaluate_enhancement(reference, noisy, estimate) -> EvalReport:
    """Score an enhanced signal against the clean reference."""
    chan_in = per_channel_si_sdr(reference, noisy)
    chan_out = per_channel_si_sdr(reference, estimate)
    sdr_in = float(chan_in.mean())
    sdr_out = float(chan_out.mean())
    return EvalReport(
        si_sdr_in=sdr_in,
        si_sdr_out=sdr_out,
        improvement=sdr_out - sdr_in,
        per_channel_in=tuple(chan_in.tolist()),
        per_channel_out=tuple(chan_out.tolist()),
    )


def aggregate(reports) -> dict:
    """Median and mean of each score over a dataset."""
    out = {}
    for key in ("si_sdr_in", "si_sdr_out", "improvement"):
        values = np.array([getattr(r, key) for r in reports])
        out[key] = {"median": float(np.median(values)),
                    "mean": float(values.mean())}
    return out


def write_report_json(path, reports) -> None:
    reports = list(reports)
    payload = {
        "items": [r.to_dict() for r in reports],
        "aggregate": aggregate(reports) if reports else {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)


def write_reports_csv(path, reports) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["si_sdr_in", "si_sdr_out", "improvement"])
        for r in reports:
            writer.writerow([r.si_sdr_in, r.si_sdr_out, r.improvement])
