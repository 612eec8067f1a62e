"""masktune command line: train a model from a mask dataset, serve it over HTTP."""

from __future__ import annotations

import logging
import sys

import click

from masktune.errors import MasktuneError
from masktune.training import TrainSpec, train


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def main(verbose):
    """Masked-LM fine-tuning and serving."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command("train")
@click.option("--base-model", required=True, help="Base model id or local directory.")
@click.option("--dataset", required=True, help="Mask dataset (JSON lines).")
@click.option("--output", required=True, help="Export directory.")
@click.option("--new-tokens", default=None, help="Token-per-line file to add to the vocabulary.")
@click.option("--epochs", default=2, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--lr", default=5e-5, show_default=True, type=float)
@click.option("--batch-size", default=8, show_default=True, type=int)
@click.option("--max-length", default=128, show_default=True, type=int)
def train_cmd(base_model, dataset, output, new_tokens, epochs, seed, lr, batch_size, max_length):
    """Fine-tune BASE_MODEL on the precomputed mask dataset."""
    tokens: tuple[str, ...] = ()
    if new_tokens:
        with open(new_tokens, encoding="utf-8") as fh:
            tokens = tuple(line.strip() for line in fh if line.strip())
    try:
        spec = TrainSpec(
            base_model_id=base_model,
            dataset_path=dataset,
            output_dir=output,
            new_tokens=tokens,
            epochs=epochs,
            seed=seed,
            learning_rate=lr,
            batch_size=batch_size,
            max_length=max_length,
        )
        report = train(spec)
    except MasktuneError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(
        f"exported {report.output_dir} (vocab {report.vocab_size}, "
        f"+{report.tokens_added} tokens, {report.examples_used} examples, "
        f"{report.examples_skipped} skipped)"
    )
    for epoch, loss in enumerate(report.epoch_losses, start=1):
        click.echo(f"epoch {epoch}: loss {loss:.4f}")


@main.command("serve")
@click.argument("model_dir")
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--model-id", default=None, help="Identifier to expect in requests.")
def serve_cmd(model_dir, port, host, model_id):
    """Serve MODEL_DIR over the fill-mask wire protocol."""
    from masktune.serving import serve

    serve(model_dir, port=port, host=host, model_id=model_id)


if __name__ == "__main__":
    main()
