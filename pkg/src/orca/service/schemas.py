"""Pydantic request/response models for the analysis API."""

from __future__ import annotations

from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class AnalysisOverrides(BaseModel):
    """Per-request parameter overrides on top of the server defaults."""

    branch: Optional[str] = None
    threshold: Optional[float] = None
    filter: Optional[str] = None
    scan: Optional[str] = None
    omega: Optional[bool] = None
    tau: Optional[str] = None
    cvss: Optional[str] = None
    preselect: Optional[str] = None
    heatmap_mode: Optional[str] = None
    workers: Optional[int] = None
    gate_metric: Optional[str] = None
    gate_band: Optional[str] = None


class AnalyzeRequest(BaseModel):
    """A raw threat list document plus optional overrides."""

    document: str
    format: str = "json"
    overrides: AnalysisOverrides = Field(default_factory=AnalysisOverrides)


class ThreatPreview(BaseModel):
    threat_id: str
    title: str
    summary: str


class PreviewResponse(BaseModel):
    threats: List[ThreatPreview]


class ScoreModel(BaseModel):
    threat_id: str
    cvss_version: str
    avg_impact: Optional[float] = None
    avg_exploitability: Optional[float] = None
    avg_base: Optional[float] = None
    band_impact: Optional[str] = None
    band_exploitability: Optional[str] = None
    band_base: Optional[str] = None
    cve_count: int
    scoreable: bool
    severity: Optional[str] = None
    likelihood: Optional[str] = None
    risk: Optional[int] = None


class MappingModel(BaseModel):
    threat_id: str
    domain: str
    threat_title: str
    target_id: str
    similarity: float
    branch: str
    admitted_by: str


class HeatmapModel(BaseModel):
    mode: str
    rows: List[str]
    columns: List[str]
    cells: List[List[float]]


class GateModel(BaseModel):
    metric: str
    band: str
    passed: bool
    failures: List[str]


class AnalyzeResponse(BaseModel):
    scores: List[ScoreModel]
    mappings: List[MappingModel]
    heatmap: HeatmapModel
    manifest: dict
    gate: Optional[GateModel] = None
    files: Dict[str, str]


class CorpusSummary(BaseModel):
    loaded: bool
    entries: int = 0
    content_hash: Optional[str] = None
    snapshot_date: Optional[str] = None


class InfoResponse(BaseModel):
    version: str
    provider_tag: str
    defaults: dict
    corpora: Dict[str, CorpusSummary]


class HealthResponse(BaseModel):
    status: str
    corpora: List[str]
