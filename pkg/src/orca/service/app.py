"""FastAPI application wrapping the analysis core.

The server loads the corpora once at startup and keeps them in memory;
clients submit threat lists and receive scores, mappings and rendered
report files. The CLI's ``submit`` command is a thin client of this API.
"""

from __future__ import annotations

import json
import logging
from dataclasses import replace
from datetime import date, datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException

import orca
from orca.config import build_pipeline_config
from orca.errors import ConfigError, OrcaError
from orca.pipeline import (
    CorpusBundle,
    PipelineConfig,
    _build_provider,
    analyze_records,
    evaluate_gate,
    load_corpora,
)
from orca.report import (
    HEATMAP_CSV,
    MANIFEST_JSON,
    MAPPINGS_TXT,
    SCORES_CSV,
    SCORES_JSON,
    RunManifest,
    heatmap_to_csv,
    mappings_to_text,
    scores_to_csv,
    scores_to_json,
)
from orca.service import schemas
from orca.threatmodel import parse_threats, synthesize_summary

logger = logging.getLogger(__name__)


def _config_from_settings(settings: dict) -> PipelineConfig:
    # Threat lists arrive inline over HTTP, so only the corpus paths matter.
    config = build_pipeline_config("-", "-", settings)
    config.validate_values()
    if config.capec is None or config.nvd is None:
        raise ConfigError("the analysis server requires capec and nvd corpora")
    if config.branch in ("ttm", "both") and config.attack is None:
        raise ConfigError(f"branch {config.branch} requires the attack corpus")
    for name in ("capec", "attack", "fight", "nvd"):
        path = getattr(config, name)
        if path is not None and not Path(path).exists():
            raise ConfigError(f"{name} path {path} does not exist")
    return config


def _apply_overrides(base: PipelineConfig, overrides: schemas.AnalysisOverrides) -> PipelineConfig:
    changes = {}
    if overrides.branch is not None:
        changes["branch"] = overrides.branch.lower()
    if overrides.threshold is not None:
        changes["cos_thrs"] = overrides.threshold
    if overrides.filter is not None:
        changes["filter_kind"] = overrides.filter.upper()
    if overrides.scan is not None:
        changes["scan_mode"] = overrides.scan.lower()
    if overrides.omega is not None:
        changes["omega"] = overrides.omega
    if overrides.tau is not None:
        try:
            changes["tau"] = date.fromisoformat(overrides.tau)
        except ValueError as exc:
            raise ConfigError(f"tau must be an ISO date: {exc}") from exc
    if overrides.cvss is not None:
        changes["cvss_version"] = overrides.cvss.lower()
    if overrides.preselect is not None:
        changes["preselect"] = overrides.preselect.lower()
    if overrides.heatmap_mode is not None:
        changes["heatmap_mode"] = overrides.heatmap_mode
    if overrides.workers is not None:
        changes["workers"] = overrides.workers
    if overrides.gate_metric is not None:
        changes["gate_metric"] = overrides.gate_metric
    if overrides.gate_band is not None:
        changes["gate_band"] = overrides.gate_band
    config = replace(base, **changes)
    config.validate_values()
    return config


def _corpus_summaries(bundle: CorpusBundle) -> dict:
    summaries = {}
    entries = {
        "capec": len(bundle.capec) if bundle.capec is not None else None,
        "attack": len(bundle.attack) if bundle.attack is not None else None,
        "nvd": len(bundle.store) if bundle.store is not None else None,
    }
    for name, count in entries.items():
        summaries[name] = schemas.CorpusSummary(
            loaded=count is not None,
            entries=count or 0,
            content_hash=bundle.hashes.get(name),
            snapshot_date=bundle.dates.get(name),
        )
    return summaries


def create_app(settings: dict) -> FastAPI:
    """Build the API with corpora loaded from the merged settings."""
    base_config = _config_from_settings(settings)
    bundle = load_corpora(base_config)
    provider = _build_provider(base_config)

    app = FastAPI(
        title="threat-analysis service",
        description="Maps threat descriptions to ATT&CK/CAPEC, expands to CVEs and scores them.",
        version=orca.__version__,
    )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        loaded = [name for name, s in _corpus_summaries(bundle).items() if s.loaded]
        return schemas.HealthResponse(status="ok", corpora=loaded)

    @app.get("/info", response_model=schemas.InfoResponse)
    def info():
        return schemas.InfoResponse(
            version=orca.__version__,
            provider_tag=provider.tag,
            defaults=base_config.echo(),
            corpora=_corpus_summaries(bundle),
        )

    @app.post("/threats/preview", response_model=schemas.PreviewResponse)
    def preview(request: schemas.AnalyzeRequest):
        try:
            records = parse_threats(request.document, request.format)
        except OrcaError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return schemas.PreviewResponse(
            threats=[
                schemas.ThreatPreview(
                    threat_id=record.threat_id,
                    title=record.title,
                    summary=synthesize_summary(record).summary,
                )
                for record in records
            ]
        )

    @app.post("/analyze", response_model=schemas.AnalyzeResponse)
    def analyze(request: schemas.AnalyzeRequest):
        started = datetime.now(timezone.utc)
        try:
            config = _apply_overrides(base_config, request.overrides)
            records = parse_threats(request.document, request.format)
            outcome = analyze_records(records, bundle, config, provider)
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except OrcaError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

        manifest = RunManifest(
            config=config.echo(),
            corpus_hashes=bundle.hashes,
            corpus_dates=bundle.dates,
            provider_tag=outcome.provider_tag,
            started=started.isoformat(),
            finished=datetime.now(timezone.utc).isoformat(),
            per_threat={
                record.threat_id: {
                    "rows": outcome.extraction_report.rows_per_threat.get(record.threat_id, 0),
                    "cves": outcome.extraction_report.distinct_cves_per_threat.get(record.threat_id, 0),
                }
                for record in records
            },
        )

        gate = None
        if config.gate_metric is not None:
            failures = evaluate_gate(config.gate_metric, config.gate_band, outcome.scores)
            gate = schemas.GateModel(
                metric=config.gate_metric,
                band=config.gate_band,
                passed=not failures,
                failures=failures,
            )

        files = {
            SCORES_CSV: scores_to_csv(outcome.scores, outcome.risks or None),
            SCORES_JSON: scores_to_json(outcome.scores, outcome.risks or None),
            MAPPINGS_TXT: mappings_to_text(outcome.mappings),
            HEATMAP_CSV: heatmap_to_csv(outcome.heatmap),
            MANIFEST_JSON: json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n",
        }

        def as_score_model(score):
            risk = (outcome.risks or {}).get(score.threat_id)
            return schemas.ScoreModel(
                threat_id=score.threat_id,
                cvss_version=score.cvss_version,
                avg_impact=score.rounded("impact"),
                avg_exploitability=score.rounded("exploitability"),
                avg_base=score.rounded("base"),
                band_impact=score.band_impact,
                band_exploitability=score.band_exploitability,
                band_base=score.band_base,
                cve_count=score.cve_count,
                scoreable=score.scoreable,
                severity=risk.severity if risk else None,
                likelihood=risk.likelihood if risk else None,
                risk=risk.risk if risk else None,
            )

        return schemas.AnalyzeResponse(
            scores=[as_score_model(score) for score in outcome.scores],
            mappings=[
                schemas.MappingModel(
                    threat_id=m.threat_id,
                    domain=m.domain_tag,
                    threat_title=m.threat_title,
                    target_id=m.target_id,
                    similarity=m.similarity,
                    branch=m.branch,
                    admitted_by=m.admitted_by,
                )
                for m in outcome.mappings
            ],
            heatmap=schemas.HeatmapModel(**outcome.heatmap.to_dict()),
            manifest=manifest.to_dict(),
            gate=gate,
            files=files,
        )

    return app
