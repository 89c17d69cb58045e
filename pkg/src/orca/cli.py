"""Command-line interface: local pipeline runs, the API server, thin client.

Configuration precedence is CLI flags over config file (YAML) over
built-in defaults; the ORCA_ENDPOINT environment variable overrides any
--endpoint value.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import requests

from orca.config import build_pipeline_config, load_config_file, merge_settings
from orca.errors import ConfigError, OrcaError
from orca.pipeline import EXIT_CONFIG, EXIT_RUNTIME, incremental_scan, run_pipeline
from orca.report import RunManifest

logger = logging.getLogger(__name__)


def _common_options(command):
    options = [
        click.option("--format", "format_", type=click.Choice(["json", "csv"]), default=None),
        click.option("--capec", type=click.Path(), default=None, help="CAPEC STIX bundle"),
        click.option("--attack", type=click.Path(), default=None, help="ATT&CK STIX bundle"),
        click.option("--fight", type=click.Path(), default=None, help="FiGHT YAML document"),
        click.option("--nvd", type=click.Path(), default=None, help="NVD feed file or directory"),
        click.option("--branch", type=click.Choice(["ttm", "tcm", "both"]), default=None),
        click.option("--threshold", type=float, default=None, help="cosine similarity threshold"),
        click.option("--filter", "filter_", type=click.Choice(["HFC", "SFC", "hfc", "sfc"]), default=None),
        click.option("--scan", type=click.Choice(["normal", "deep"]), default=None),
        click.option("--omega/--no-omega", default=None, help="drop duplicate (threat, CVE) rows"),
        click.option("--tau", default=None, help="earliest admitted CVE publication date (ISO)"),
        click.option("--cvss", type=click.Choice(["v2", "v3", "v4"]), default=None),
        click.option("--provider", type=click.Choice(["baseline", "service"]), default=None),
        click.option("--endpoint", default=None, help="embedding/classifier service URL"),
        click.option("--preselect", type=click.Choice(["psi", "xi"]), default=None),
        click.option("--gate-metric", type=click.Choice(["base", "impact", "exploitability"]), default=None),
        click.option("--gate-band", type=click.Choice(["Medium", "High"]), default=None),
        click.option("--workers", type=int, default=None),
        click.option("--heatmap-mode", type=click.Choice(["count", "base_sum"]), default=None),
        click.option("--cache-dir", type=click.Path(), default=None),
        click.option("--config", "config_file", type=click.Path(), default=None, help="YAML config file"),
    ]
    for option in reversed(options):
        command = option(command)
    return command


@click.group()
@click.option("--verbose", is_flag=True, default=False)
def main(verbose: bool):
    """Threat-analysis pipeline: map, extract, score, gate."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@click.option("--threats", required=True, type=click.Path(), help="threat list (JSON or CSV)")
@click.option("--out", required=True, type=click.Path(), help="report output directory")
@click.option("--since-manifest", type=click.Path(), default=None, help="manifest of the previous run for a delta scan")
@_common_options
def run(threats, out, since_manifest, config_file, format_, filter_, **options):
    """Run the full pipeline locally and gate on the scores."""
    try:
        settings = merge_settings(
            {"format": format_, "filter": filter_, **options}, load_config_file(config_file)
        )
        config = build_pipeline_config(threats, out, settings)
        if since_manifest:
            try:
                manifest = RunManifest.from_dict(
                    json.loads(Path(since_manifest).read_text(encoding="utf-8"))
                )
            except (OSError, json.JSONDecodeError) as exc:
                raise OrcaError(f"cannot read manifest {since_manifest}: {exc}") from exc
            result = incremental_scan(config, manifest)
        else:
            result = run_pipeline(config)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except OrcaError as exc:
        click.echo(f"pipeline error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)

    for name, path in sorted(result.reports.items()):
        click.echo(f"wrote {path}")
    scoreable = sum(1 for score in result.scores if score.scoreable)
    click.echo(
        f"threats: {len(result.scores)} ({scoreable} scoreable), "
        f"mappings: {len(result.mappings)}, rows: {len(result.rows)}"
    )
    if result.gate_failures:
        click.echo(f"gate FAILED for: {', '.join(result.gate_failures)}", err=True)
    sys.exit(result.exit_code)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@_common_options
def serve(host, port, config_file, format_, filter_, **options):
    """Start the analysis API server with the corpora loaded once."""
    import uvicorn

    from orca.service.app import create_app

    try:
        settings = merge_settings(
            {"format": format_, "filter": filter_, **options}, load_config_file(config_file)
        )
        app = create_app(settings)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except OrcaError as exc:
        click.echo(f"startup error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("--server", required=True, help="URL of a running analysis server")
@click.option("--threats", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--format", "format_", type=click.Choice(["json", "csv"]), default="json")
@click.option("--branch", type=click.Choice(["ttm", "tcm", "both"]), default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--filter", "filter_", type=click.Choice(["HFC", "SFC", "hfc", "sfc"]), default=None)
@click.option("--scan", type=click.Choice(["normal", "deep"]), default=None)
@click.option("--omega/--no-omega", default=None)
@click.option("--tau", default=None)
@click.option("--cvss", type=click.Choice(["v2", "v3", "v4"]), default=None)
@click.option("--gate-metric", type=click.Choice(["base", "impact", "exploitability"]), default=None)
@click.option("--gate-band", type=click.Choice(["Medium", "High"]), default=None)
def submit(server, threats, out, format_, filter_, omega, **overrides):
    """Send a threat list to a running server and write its reports."""
    try:
        document = Path(threats).read_text(encoding="utf-8")
    except OSError as exc:
        click.echo(f"cannot read {threats}: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    payload = {
        "document": document,
        "format": format_,
        "overrides": {
            key: value
            for key, value in {**overrides, "filter": filter_, "omega": omega}.items()
            if value is not None
        },
    }
    try:
        response = requests.post(f"{server.rstrip('/')}/analyze", json=payload, timeout=600)
        response.raise_for_status()
    except requests.RequestException as exc:
        click.echo(f"server error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    body = response.json()

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in body.get("files", {}).items():
        (out_dir / name).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out_dir / name}")
    gate = body.get("gate") or {}
    if gate.get("failures"):
        click.echo(f"gate FAILED for: {', '.join(gate['failures'])}", err=True)
        sys.exit(3)
    sys.exit(0)


if __name__ == "__main__":
    main()
