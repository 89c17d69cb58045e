"""Shared settings handling for the CLI and the API server.

Precedence: explicit CLI values > config file (YAML) > defaults; the
ORCA_ENDPOINT environment variable overrides any configured endpoint.
"""

from __future__ import annotations

import os
from datetime import date
from pathlib import Path

import yaml

from orca.errors import ConfigError
from orca.pipeline import DEFAULT_COS_THRS, PipelineConfig

DEFAULTS = {
    "format": "json",
    "branch": "tcm",
    "threshold": DEFAULT_COS_THRS,
    "filter": "SFC",
    "scan": "normal",
    "omega": False,
    "tau": "1998-01-01",
    "cvss": "v2",
    "provider": "baseline",
    "endpoint": None,
    "preselect": "psi",
    "gate_metric": None,
    "gate_band": None,
    "workers": 1,
    "heatmap_mode": "count",
    "cache_dir": None,
    "capec": None,
    "attack": None,
    "fight": None,
    "nvd": None,
}


def load_config_file(path: str | None) -> dict:
    """Read the YAML config file; missing path means no file settings."""
    if not path:
        return {}
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a mapping")
    return data


def merge_settings(cli_values: dict, file_values: dict) -> dict:
    """Layer config file values and explicit CLI values over the defaults."""
    merged = dict(DEFAULTS)
    for key, value in file_values.items():
        if key not in merged:
            raise ConfigError(f"unknown config file key {key!r}")
        merged[key] = value
    for key, value in cli_values.items():
        if value is not None:
            merged[key] = value
    endpoint_env = os.environ.get("ORCA_ENDPOINT")
    if endpoint_env:
        merged["endpoint"] = endpoint_env
    return merged


def parse_tau(value) -> date:
    if isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError as exc:
        raise ConfigError(f"tau must be an ISO date, got {value!r}") from exc


def build_pipeline_config(threats: str, out: str, settings: dict) -> PipelineConfig:
    """Construct a PipelineConfig from merged string-keyed settings."""

    def path_or_none(key):
        return Path(settings[key]) if settings.get(key) else None

    return PipelineConfig(
        threats=Path(threats),
        out_dir=Path(out),
        threat_format=str(settings["format"]).lower(),
        capec=path_or_none("capec"),
        attack=path_or_none("attack"),
        fight=path_or_none("fight"),
        nvd=path_or_none("nvd"),
        branch=str(settings["branch"]).lower(),
        cos_thrs=float(settings["threshold"]),
        filter_kind=str(settings["filter"]).upper(),
        scan_mode=str(settings["scan"]).lower(),
        omega=bool(settings["omega"]),
        tau=parse_tau(settings["tau"]),
        cvss_version=str(settings["cvss"]).lower(),
        provider=str(settings["provider"]).lower(),
        endpoint=settings.get("endpoint"),
        preselect=str(settings["preselect"]).lower(),
        gate_metric=settings.get("gate_metric"),
        gate_band=settings.get("gate_band"),
        heatmap_mode=str(settings["heatmap_mode"]),
        workers=int(settings["workers"]),
        cache_dir=path_or_none("cache_dir"),
    )
