"""train-vae: fit spectrum networks on a corpus and export weights."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import TrainingConfig
from .elbo import DivergentLossError
from .export import export_weights
from .features import CorpusError
from .train import train

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


@click.command()
@click.version_option(version="0.1.0")
@click.option("--corpus", "corpus_dir", required=True,
              type=click.Path(path_type=Path),
              help="Directory of clean-speech WAV files.")
@click.option("--latent-dim", required=True, type=int,
              help="Dimension of the latent space.")
@click.option("--hidden", "hidden_dims", multiple=True, type=int,
              default=(128,), show_default=True,
              help="Hidden layer sizes (repeatable).")
@click.option("--out", "out_path", required=True,
              type=click.Path(path_type=Path),
              help="Weight bundle to write.")
@click.option("--log", "log_path", type=click.Path(path_type=Path),
              default=None,
              help="Training log JSON [default: <out>.log.json].")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--epochs", type=int, default=200, show_default=True)
@click.option("--batch-size", type=int, default=128, show_default=True)
@click.option("--learning-rate", type=float, default=1e-3,
              show_default=True)
@click.option("--patience", type=int, default=10, show_default=True)
@click.option("--val-fraction", type=float, default=0.2,
              show_default=True)
@click.option("--window-length", type=int, default=1024,
              show_default=True)
@click.option("--hop", type=int, default=256, show_default=True)
def main(corpus_dir, latent_dim, hidden_dims, out_path, log_path, seed,
         epochs, batch_size, learning_rate, patience, val_fraction,
         window_length, hop):
    """Train the decoder/encoder pair and write the shared weight file."""
    try:
        cfg = TrainingConfig(latent_dim=latent_dim,
                             hidden_dims=tuple(hidden_dims),
                             learning_rate=learning_rate,
                             batch_size=batch_size, patience=patience,
                             validation_fraction=val_fraction,
                             max_epochs=epochs, seed=seed)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if not corpus_dir.is_dir():
        click.echo(f"error: corpus directory not found: {corpus_dir}",
                   err=True)
        sys.exit(EXIT_IO)
    paths = sorted(corpus_dir.rglob("*.wav"))
    try:
        result = train(paths, cfg, window_length=window_length, hop=hop)
    except CorpusError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_IO)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except DivergentLossError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    for record in result.history:
        click.echo(f"epoch {record['epoch']:4d}  "
                   f"train {record['train_elbo']:12.4f}  "
                   f"val {record['val_elbo']:12.4f}")
    click.echo(f"best epoch {result.best_epoch}")
    export_weights(out_path, result)
    log_file = log_path or Path(str(out_path) + ".log.json")
    log_file.write_text(json.dumps({
        "best_epoch": result.best_epoch,
        "epochs": result.history,
        "latent_dim": cfg.latent_dim,
        "hidden_dims": list(cfg.hidden_dims),
        "seed": cfg.seed,
    }, indent=2))
    click.echo(f"wrote {out_path} and {log_file}")
