"""Command-line surface: enhance, enhance-baseline, simulate, evaluate,
pretrain-nmf.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numerical
failure.  Default values carry a tag in --help: [method] for options that
change the estimator in exact arithmetic, [impl] for implementation
decisions that only affect runtime, output format, or seeding.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .audio_io import read_wav, write_wav
from .baseline import (DictionaryFormatError, load_dictionary,
                       pretrain_dictionary, run_baseline, save_dictionary)
from .linalg import SingularMatrixError
from .mcem import McemConfig, run
from .metrics import evaluate_enhancement, per_channel_si_sdr, si_sdr, \
    write_report_json
from .model import save_params
from .nn import CorruptWeightsError, WeightFormatError, load_weights
from .simulate import MixSpec, mix, spatialize
from .stft import StftConfig, analyze
from .validation import check_waveform
from .wiener import ReconstructionConfig, wiener_estimate

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


class _CliError(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def _config_error(message: str) -> _CliError:
    return _CliError(message, EXIT_CONFIG)


def _io_error(message: str) -> _CliError:
    return _CliError(message, EXIT_IO)


def _numerical_error(message: str) -> _CliError:
    return _CliError(message, EXIT_NUMERICAL)


def _read_audio(path: str) -> tuple[np.ndarray, int]:
    try:
        return read_wav(path)
    except FileNotFoundError as exc:
        raise _io_error(f"cannot read {path}: {exc}") from exc
    except (OSError, ValueError) as exc:
        raise _io_error(f"cannot read {path}: {exc}") from exc


def _limit_threads(n_threads):
    import threadpoolctl
    if n_threads is None:
        return threadpoolctl.threadpool_limits(limits=None)
    return threadpoolctl.threadpool_limits(limits=n_threads)


def _stft_config(sample_rate: int, window_length: int, hop: int) -> StftConfig:
    try:
        return StftConfig(sample_rate=sample_rate,
                          window_length=window_length, hop=hop)
    except ValueError as exc:
        raise _config_error(str(exc)) from exc


@click.group()
@click.version_option(version=__version__)
def main() -> None:
    """Multichannel speech enhancement tools."""


@main.command()
@click.option("--input", "input_path", required=True,
              type=click.Path(), help="Noisy multichannel WAV.")
@click.option("--weights", "weights_path", required=True, type=click.Path(),
              help="Decoder/encoder weight bundle.")
@click.option("--output", "output_dir", required=True, type=click.Path(),
              help="Output directory (created if missing).")
@click.option("--em-iters", default=50, show_default=True,
              help="EM iterations. [method]")
@click.option("--mh-iters", default=40, show_default=True,
              help="Sampler iterations per E-step. [method]")
@click.option("--burn-in", default=30, show_default=True,
              help="Discarded sampler iterations. [method]")
@click.option("--eps2", default=0.01, show_default=True,
              help="Random-walk proposal variance. [method]")
@click.option("--kb", default=10, show_default=True,
              help="Noise NMF rank. [method]")
@click.option("--reconstruct-iters", default=100, show_default=True,
              help="Sampler iterations for reconstruction. [impl]")
@click.option("--reconstruct-burn-in", default=50, show_default=True,
              help="Discarded reconstruction iterations. [impl]")
@click.option("--window-length", default=1024, show_default=True,
              help="Analysis window in samples. [method]")
@click.option("--hop", default=256, show_default=True,
              help="Hop size in samples (75% overlap). [method]")
@click.option("--seed", default=0, show_default=True,
              help="RNG seed. [impl]")
@click.option("--threads", default=None, type=int,
              help="Max BLAS threads (default: all cores). [impl]")
@click.option("--pcm16", is_flag=True, help="Write 16-bit PCM WAVs. [impl]")
def enhance(input_path, weights_path, output_dir, em_iters, mh_iters,
            burn_in, eps2, kb, reconstruct_iters, reconstruct_burn_in,
            window_length, hop, seed, threads, pcm16) -> None:
    """Enhance a noisy recording with the sampled-EM pipeline."""
    wav, sample_rate = _read_audio(input_path)
    try:
        networks = load_weights(weights_path)
    except FileNotFoundError as exc:
        raise _io_error(f"cannot read {weights_path}: {exc}") from exc
    except WeightFormatError as exc:
        raise _io_error(f"bad weight file: {exc}") from exc
    if "decoder" not in networks or "encoder" not in networks:
        raise _io_error(f"{weights_path} lacks decoder/encoder entries")
    cfg = _stft_config(sample_rate, window_length, hop)
    try:
        mcem_cfg = McemConfig(em_iterations=em_iters, mh_iterations=mh_iters,
                              burn_in=burn_in, proposal_variance=eps2,
                              n_noise_components=kb, seed=seed)
        recon_cfg = ReconstructionConfig(mh_iterations=reconstruct_iters,
                                         burn_in=reconstruct_burn_in,
                                         proposal_variance=eps2)
    except ValueError as exc:
        raise _config_error(str(exc)) from exc
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "log.jsonl"
    try:
        with _limit_threads(threads), open(log_path, "w",
                                           encoding="utf-8") as log:
            def emit(record: dict) -> None:
                log.write(json.dumps(record) + "\n")

            emit({"event": "config", "input": str(input_path),
                  "weights": str(weights_path), "sample_rate": sample_rate,
                  "em_iters": em_iters, "mh_iters": mh_iters,
                  "burn_in": burn_in, "eps2": eps2, "kb": kb,
                  "reconstruct_iters": reconstruct_iters,
                  "reconstruct_burn_in": reconstruct_burn_in,
                  "window_length": window_length, "hop": hop, "seed": seed})
            spec = _analyze_checked(wav, cfg, networks["decoder"])
            rng = np.random.default_rng(seed)
            params, chain = run(
                spec, networks, mcem_cfg, rng=rng,
                callback=lambda rec: emit({"event": "iteration", **rec}))
            result = wiener_estimate(spec, params, networks["decoder"],
                                     chain, recon_cfg, rng, cfg)
    except (SingularMatrixError, CorruptWeightsError,
            FloatingPointError) as exc:
        raise _numerical_error(str(exc)) from exc
    write_wav(out / "speech.wav", result.speech_wav, sample_rate, pcm16=pcm16)
    write_wav(out / "noise.wav", result.noise_wav, sample_rate, pcm16=pcm16)
    save_params(out / "params.json", params)
    click.echo(f"wrote {out / 'speech.wav'}, {out / 'noise.wav'}, "
               f"{out / 'params.json'}, {log_path}")


def _analyze_checked(wav, cfg, network):
    try:
        wav = check_waveform(wav, "input")
        spec = analyze(wav, cfg)
    except ValueError as exc:
        raise _config_error(str(exc)) from exc
    if spec.n_bins != network.spectrum_dim:
        raise _config_error(
            f"window produces {spec.n_bins} bins but the model expects "
            f"{network.spectrum_dim}; adjust --window-length")
    return spec


@main.command("enhance-baseline")
@click.option("--input", "input_path", required=True, type=click.Path(),
              help="Noisy multichannel WAV.")
@click.option("--dictionary", "dict_path", required=True, type=click.Path(),
              help="Pretrained speech dictionary container.")
@click.option("--output", "output_dir", required=True, type=click.Path(),
              help="Output directory (created if missing).")
@click.option("--iters", default=50, show_default=True,
              help="EM sweeps. [method]")
@click.option("--ks", default=None, type=int,
              help="Expected dictionary rank; mismatch aborts. [impl]")
@click.option("--kb", default=10, show_default=True,
              help="Noise NMF rank. [method]")
@click.option("--window-length", default=1024, show_default=True,
              help="Analysis window in samples. [method]")
@click.option("--hop", default=256, show_default=True,
              help="Hop size in samples. [method]")
@click.option("--seed", default=0, show_default=True, help="RNG seed. [impl]")
@click.option("--pcm16", is_flag=True, help="Write 16-bit PCM WAVs. [impl]")
def enhance_baseline(input_path, dict_path, output_dir, iters, ks, kb,
                     window_length, hop, seed, pcm16) -> None:
    """Enhance with the supervised-NMF baseline."""
    wav, sample_rate = _read_audio(input_path)
    try:
        dictionary = load_dictionary(dict_path)
    except FileNotFoundError as exc:
        raise _io_error(f"cannot read {dict_path}: {exc}") from exc
    except DictionaryFormatError as exc:
        raise _io_error(f"bad dictionary file: {exc}") from exc
    if ks is not None and ks != dictionary.n_components:
        raise _config_error(
            f"dictionary has {dictionary.n_components} components, "
            f"--ks says {ks}")
    cfg = _stft_config(sample_rate, window_length, hop)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "log.jsonl"
    try:
        wav = check_waveform(wav, "input")
        spec = analyze(wav, cfg)
        if spec.n_bins != dictionary.n_bins:
            raise _config_error(
                f"window produces {spec.n_bins} bins but the dictionary has "
                f"{dictionary.n_bins}")
        with open(log_path, "w", encoding="utf-8") as log:
            log.write(json.dumps({
                "event": "config", "input": str(input_path),
                "dictionary": str(dict_path), "iters": iters, "kb": kb,
                "window_length": window_length, "hop": hop,
                "seed": seed}) + "\n")
            params, result = run_baseline(
                spec, dictionary, iterations=iters, n_noise_components=kb,
                rng=np.random.default_rng(seed), stft_cfg=cfg,
                callback=lambda rec: log.write(
                    json.dumps({"event": "iteration", **rec}) + "\n"))
    except ValueError as exc:
        raise _config_error(str(exc)) from exc
    except (SingularMatrixError, FloatingPointError) as exc:
        raise _numerical_error(str(exc)) from exc
    write_wav(out / "speech.wav", result.speech_wav, sample_rate, pcm16=pcm16)
    write_wav(out / "noise.wav", result.noise_wav, sample_rate, pcm16=pcm16)
    click.echo(f"wrote {out / 'speech.wav'}, {out / 'noise.wav'}, {log_path}")


@main.command("simulate")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(), help="JSON list of mixture descriptions.")
def simulate_cmd(manifest_path) -> None:
    """Create stereo mixtures from a manifest.

    Each item: {"speech": wav, "noise": wav, "doa": deg,
    "noise_doa": deg, "snr_db": dB, "outputs": {"mixture": wav,
    "speech": wav, "noise": wav}} plus optional "mic_spacing" and
    "sound_speed".  Mono noise is spatialized at noise_doa; multichannel
    noise is used as-is.
    """
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError as exc:
        raise _io_error(f"cannot read {manifest_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _config_error(f"bad manifest JSON: {exc}") from exc
    if not isinstance(manifest, list) or not manifest:
        raise _config_error("manifest must be a nonempty JSON list")
    for idx, item in enumerate(manifest):
        try:
            _simulate_item(item)
        except (KeyError, ValueError, TypeError) as exc:
            raise _config_error(f"manifest item {idx}: {exc}") from exc
    click.echo(f"wrote {len(manifest)} mixtures")


def _simulate_item(item: dict) -> None:
    speech, rate_s = _read_audio(item["speech"])
    noise, rate_b = _read_audio(item["noise"])
    if rate_s != rate_b:
        raise ValueError(f"sample rates differ: {rate_s} vs {rate_b}")
    geometry = {k: item[k] for k in ("mic_spacing", "sound_speed")
                if k in item}
    snr_db = float(item.get("snr_db", 0.0))
    if speech.shape[0] != 1:
        raise ValueError("speech must be mono")
    speech_st = spatialize(speech[0], MixSpec(doa=float(item["doa"]),
                                              **geometry), rate_s)
    if noise.shape[0] == 1:
        noise_st = spatialize(noise[0],
                              MixSpec(doa=float(item.get("noise_doa", 0.0)),
                                      **geometry), rate_b)
    else:
        noise_st = noise[:speech_st.shape[0]]
    mixture, speech_gt, noise_gt = mix(speech_st, noise_st, snr_db)
    outputs = item["outputs"]
    write_wav(outputs["mixture"], mixture, rate_s)
    write_wav(outputs["speech"], speech_gt, rate_s)
    write_wav(outputs["noise"], noise_gt, rate_s)


@main.command("evaluate")
@click.option("--reference", "reference_path", required=True,
              type=click.Path(), help="Clean reference WAV.")
@click.option("--estimate", "estimate_path", required=True,
              type=click.Path(), help="Enhanced estimate WAV.")
@click.option("--noisy", "noisy_path", default=None, type=click.Path(),
              help="Unprocessed mixture WAV (enables improvement report).")
@click.option("--report", "report_path", required=True, type=click.Path(),
              help="Output JSON report path.")
def evaluate_cmd(reference_path, estimate_path, noisy_path,
                 report_path) -> None:
    """Report SI-SDR of an estimate against its clean reference."""
    reference, rate_r = _read_audio(reference_path)
    estimate, rate_e = _read_audio(estimate_path)
    if rate_r != rate_e:
        raise _config_error(f"sample rates differ: {rate_r} vs {rate_e}")
    n = min(reference.shape[1], estimate.shape[1])
    reference, estimate = reference[:, :n], estimate[:, :n]
    try:
        if noisy_path is not None:
            noisy, _ = _read_audio(noisy_path)
            report = evaluate_enhancement(reference, noisy[:, :n], estimate)
            payload = report.to_dict()
        else:
            payload = {
                "si_sdr_out": si_sdr(reference, estimate),
                "per_channel_out":
                    per_channel_si_sdr(reference, estimate).tolist(),
            }
    except ValueError as exc:
        raise _config_error(str(exc)) from exc
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
    click.echo(f"wrote {report_path}")


@main.command("pretrain-nmf")
@click.option("--corpus", "corpus_paths", required=True, multiple=True,
              type=click.Path(), help="Clean speech WAV (repeatable).")
@click.option("--ks", required=True, type=int, help="Dictionary rank.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Output dictionary container.")
@click.option("--iterations", default=500, show_default=True,
              help="NMF update iterations. [impl]")
@click.option("--window-length", default=1024, show_default=True,
              help="Analysis window in samples. [method]")
@click.option("--hop", default=256, show_default=True,
              help="Hop size in samples. [method]")
@click.option("--seed", default=0, show_default=True, help="RNG seed. [impl]")
def pretrain_nmf(corpus_paths, ks, out_path, iterations, window_length,
                 hop, seed) -> None:
    """Learn a speech dictionary from clean recordings."""
    if ks < 1:
        raise _config_error("--ks must be >= 1")
    spectra = []
    for path in corpus_paths:
        wav, sample_rate = _read_audio(path)
        cfg = _stft_config(sample_rate, window_length, hop)
        try:
            spec = analyze(check_waveform(wav, path), cfg)
        except ValueError as exc:
            raise _config_error(f"{path}: {exc}") from exc
        spectra.append(np.mean(np.abs(spec.data) ** 2, axis=0))
    try:
        dictionary = pretrain_dictionary(
            spectra, ks, iterations=iterations,
            rng=np.random.default_rng(seed))
    except ValueError as exc:
        raise _config_error(str(exc)) from exc
    save_dictionary(out_path, dictionary)
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
