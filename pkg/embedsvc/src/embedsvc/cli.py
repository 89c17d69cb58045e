"""CLI entry point: pick a backend and serve the API."""

from __future__ import annotations

import logging
import sys

import click

from embedsvc.backends import PINNED_MODEL, load_backend
from embedsvc.classifiers import build_classifiers


@click.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8100)
@click.option(
    "--backend",
    "backend_kind",
    type=click.Choice(["model", "hash"]),
    default="model",
    help="transformer model or the deterministic offline stub",
)
@click.option("--model", "model_name", default=PINNED_MODEL, help="sentence-transformers model id")
@click.option(
    "--classifier",
    "classifier_names",
    multiple=True,
    type=click.Choice(["keyword"]),
    help="tactic classifiers to load (repeatable)",
)
@click.option("--batch-cap", type=int, default=64)
@click.option("--verbose", is_flag=True, default=False)
def main(host, port, backend_kind, model_name, classifier_names, batch_cap, verbose):
    """Serve sentence embeddings and tactic classification over HTTP."""
    import uvicorn

    from embedsvc.app import create_app

    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO)
    try:
        backend = load_backend(backend_kind, model_name)
    except Exception as exc:
        click.echo(f"cannot load backend {backend_kind!r}: {exc}", err=True)
        sys.exit(1)
    classifiers = build_classifiers(list(classifier_names))
    app = create_app(backend, classifiers, batch_cap=batch_cap)
    info = backend.info()
    click.echo(f"serving {info.model} (dimension {info.dimension}) on {host}:{port}")
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
