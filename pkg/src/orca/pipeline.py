"""Full pipeline orchestration: preprocess, map, extract, score, report.

Corpus and threat preprocessing are skipped when the input content hash
matches a cache entry, so unchanged inputs only pay for extraction. Exit
codes follow the CI contract: 0 success, 1 usage/config error, 2
runtime/data error, 3 gate failed.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

from orca.corpus import (
    AttackSnapshot,
    CapecSnapshot,
    CweIndex,
    VulnStore,
    content_hash,
    load_attack,
    load_capec,
    load_cached,
    load_nvd,
    prepare_fight,
    store_cached,
)
from orca.corpus.types import id_sort_key
from orca.errors import ConfigError, MappingError, OrcaError
from orca.extraction import ExtractionReport, ExtractionRow, ScanConfig, extract_rows, write_rows
from orca.mapping import HFC, SFC, MappingResult, map_tcm, map_ttm
from orca.report import (
    HEATMAP_BASE_SUM,
    HEATMAP_COUNT,
    RunManifest,
    TacticHeatmap,
    build_heatmap,
    emit_reports,
)
from orca.scoring import (
    BAND_HIGH,
    BAND_LOW,
    BAND_MEDIUM,
    QualitativeRisk,
    ThreatScore,
    qualitative_risk,
    score_threat,
)
from orca.semsim import BaselineProvider, CachingProvider, RemoteProvider
from orca.tactics import BaselineTacticClassifier, RemoteTacticClassifier, classify_tactics
from orca.threatmodel import (
    ThreatRecord,
    parse_threats,
    records_from_payload,
    records_to_payload,
    synthesize_summary,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_GATE = 3

_BAND_ORDER = {BAND_LOW: 1, BAND_MEDIUM: 2, BAND_HIGH: 3}

BRANCH_CHOICES = ("ttm", "tcm", "both")
DEFAULT_COS_THRS = 0.55
DEFAULT_TAU = date(1998, 1, 1)


@dataclass
class PipelineConfig:
    """Every tuning parameter of a pipeline run.

    Defaults mirror the demonstration setup: TCM branch, soft filter,
    Normal scan, omega=false, CVSS v2, tau=1998-01-01, cos_thrs=0.55.
    """

    threats: Path
    out_dir: Path
    threat_format: str = "json"
    capec: Optional[Path] = None
    attack: Optional[Path] = None
    fight: Optional[Path] = None
    nvd: Optional[Path] = None
    branch: str = "tcm"
    cos_thrs: float = DEFAULT_COS_THRS
    filter_kind: str = SFC
    scan_mode: str = "normal"
    omega: bool = False
    tau: date = DEFAULT_TAU
    cvss_version: str = "v2"
    provider: str = "baseline"
    endpoint: Optional[str] = None
    preselect: str = "psi"
    classifier_top_k: int = 3
    gate_metric: Optional[str] = None
    gate_band: Optional[str] = None
    heatmap_mode: str = HEATMAP_COUNT
    workers: int = 1
    cache_dir: Optional[Path] = None

    def validate(self) -> None:
        self.validate_values()
        self.validate_paths()

    def validate_values(self) -> None:
        if not -1.0 <= self.cos_thrs <= 1.0:
            raise ConfigError(f"cos_thrs {self.cos_thrs} outside [-1, 1]")
        if self.branch not in BRANCH_CHOICES:
            raise ConfigError(f"branch must be one of {BRANCH_CHOICES}, got {self.branch!r}")
        if self.filter_kind not in (HFC, SFC):
            raise ConfigError(f"filter must be HFC or SFC, got {self.filter_kind!r}")
        if self.scan_mode not in ("normal", "deep"):
            raise ConfigError(f"scan must be normal or deep, got {self.scan_mode!r}")
        if self.cvss_version not in ("v2", "v3", "v4"):
            raise ConfigError(f"cvss must be v2, v3 or v4, got {self.cvss_version!r}")
        if self.threat_format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.threat_format!r}")
        if self.preselect not in ("psi", "xi"):
            raise ConfigError(f"preselect must be psi or xi, got {self.preselect!r}")
        if self.provider not in ("baseline", "service"):
            raise ConfigError(f"provider must be baseline or service, got {self.provider!r}")
        if self.provider == "service" and not self.endpoint:
            raise ConfigError("provider=service requires an endpoint")
        if self.tau < date(1988, 1, 1):
            raise ConfigError("tau must not predate 1988-01-01")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.heatmap_mode not in (HEATMAP_COUNT, HEATMAP_BASE_SUM):
            raise ConfigError(f"unknown heatmap mode {self.heatmap_mode!r}")
        if (self.gate_metric is None) != (self.gate_band is None):
            raise ConfigError("gate-metric and gate-band must be set together")
        if self.gate_metric is not None:
            if self.gate_metric not in ("base", "impact", "exploitability"):
                raise ConfigError(f"unknown gate metric {self.gate_metric!r}")
            if self.gate_band not in (BAND_MEDIUM, BAND_HIGH):
                raise ConfigError(f"gate band must be Medium or High, got {self.gate_band!r}")

    def validate_paths(self) -> None:
        if not Path(self.threats).exists():
            raise ConfigError(f"threat file {self.threats} does not exist")
        needs_capec = True
        needs_attack = self.branch in ("ttm", "both")
        required = {"capec": (self.capec, needs_capec), "nvd": (self.nvd, True)}
        required["attack"] = (self.attack, needs_attack)
        for name, (path, needed) in required.items():
            if not needed:
                continue
            if path is None:
                raise ConfigError(f"--{name} is required for branch {self.branch}")
            if not Path(path).exists():
                raise ConfigError(f"{name} path {path} does not exist")
        if self.fight is not None and not Path(self.fight).exists():
            raise ConfigError(f"fight path {self.fight} does not exist")

    def echo(self) -> dict:
        """JSON-serializable echo of the full configuration."""
        return {
            "threats": str(self.threats),
            "threat_format": self.threat_format,
            "capec": str(self.capec) if self.capec else None,
            "attack": str(self.attack) if self.attack else None,
            "fight": str(self.fight) if self.fight else None,
            "nvd": str(self.nvd) if self.nvd else None,
            "branch": self.branch,
            "cos_thrs": self.cos_thrs,
            "filter": self.filter_kind,
            "scan": self.scan_mode,
            "omega": self.omega,
            "tau": self.tau.isoformat(),
            "cvss_version": self.cvss_version,
            "provider": self.provider,
            "endpoint": self.endpoint,
            "preselect": self.preselect,
            "classifier_top_k": self.classifier_top_k,
            "gate_metric": self.gate_metric,
            "gate_band": self.gate_band,
            "heatmap_mode": self.heatmap_mode,
            "workers": self.workers,
            "out_dir": str(self.out_dir),
        }


@dataclass
class PipelineResult:
    """Outcome of one run: exit code, reports on disk, in-memory results."""

    exit_code: int
    reports: Dict[str, Path] = field(default_factory=dict)
    scores: List[ThreatScore] = field(default_factory=list)
    mappings: List[MappingResult] = field(default_factory=list)
    rows: List[ExtractionRow] = field(default_factory=list)
    heatmap: Optional[TacticHeatmap] = None
    manifest: Optional[RunManifest] = None
    extraction_report: Optional[ExtractionReport] = None
    gate_failures: List[str] = field(default_factory=list)


def _read_bytes(path: Path) -> bytes:
    return Path(path).read_bytes()


def _nvd_documents(path: Path) -> List[bytes]:
    path = Path(path)
    if path.is_dir():
        # Feed order = sorted file names; later files supersede earlier ones.
        return [candidate.read_bytes() for candidate in sorted(path.glob("*.json"))]
    return [path.read_bytes()]


class CorpusBundle:
    """Loaded snapshots plus their content hashes for the manifest."""

    def __init__(self):
        self.capec: Optional[CapecSnapshot] = None
        self.attack: Optional[AttackSnapshot] = None
        self.store: Optional[VulnStore] = None
        self.index: Optional[CweIndex] = None
        self.hashes: Dict[str, str] = {}
        self.dates: Dict[str, Optional[str]] = {}


def load_corpora(config: PipelineConfig) -> CorpusBundle:
    """Ingest (or cache-load) every corpus the configured branches need."""
    bundle = CorpusBundle()
    cache_dir = Path(config.cache_dir) if config.cache_dir else None

    def cached(corpus_type: str, digest: str, from_dict, build):
        if cache_dir is not None:
            hit = load_cached(cache_dir, corpus_type, digest, from_dict)
            if hit is not None:
                logger.info("%s: reusing cached snapshot %s", corpus_type, digest[:16])
                return hit
        snapshot = build()
        if cache_dir is not None:
            store_cached(cache_dir, corpus_type, digest, snapshot.to_dict())
        return snapshot

    if config.capec is not None:
        raw = _read_bytes(config.capec)
        digest = content_hash(raw)
        bundle.capec = cached("capec", digest, CapecSnapshot.from_dict, lambda: load_capec(raw))
        bundle.hashes["capec"] = digest
        bundle.dates["capec"] = bundle.capec.snapshot_date

    if config.attack is not None:
        raw = _read_bytes(config.attack)
        digest = content_hash(raw)
        attack = cached("attack", digest, AttackSnapshot.from_dict, lambda: load_attack(raw))
        bundle.hashes["attack"] = digest
        bundle.dates["attack"] = attack.snapshot_date
        if config.fight is not None:
            fight_raw = _read_bytes(config.fight)
            fight_digest = content_hash(raw + fight_raw)
            enriched = cached(
                "attack-fight",
                fight_digest,
                AttackSnapshot.from_dict,
                lambda: prepare_fight(fight_raw, attack)[0],
            )
            bundle.hashes["fight"] = content_hash(fight_raw)
            bundle.dates["fight"] = enriched.snapshot_date
            attack = enriched
        bundle.attack = attack

    if config.nvd is not None:
        documents = _nvd_documents(config.nvd)
        digest = content_hash(documents)
        store = cached("nvd", digest, VulnStore.from_dict, lambda: load_nvd(documents)[0])
        bundle.store = store
        bundle.index = CweIndex.from_store(store)
        bundle.hashes["nvd"] = digest
        bundle.dates["nvd"] = store.snapshot_date

    return bundle


def _build_provider(config: PipelineConfig) -> CachingProvider:
    if config.provider == "service":
        return CachingProvider(RemoteProvider(config.endpoint))
    return CachingProvider(BaselineProvider())


def load_threats(config: PipelineConfig) -> tuple[List[ThreatRecord], str]:
    """Parse the threat list, skipping the parse when its hash is cached.

    Embeddings are recomputed per run (they depend on the provider); the
    cache covers parsing and summary synthesis.
    """
    raw = _read_bytes(config.threats)
    digest = content_hash(raw)
    if config.cache_dir is not None:
        cached = load_cached(Path(config.cache_dir), "threats", digest, records_from_payload)
        if cached is not None:
            logger.info("threats: reusing cached preprocessing %s", digest[:16])
            return cached, digest
    records = parse_threats(raw, config.threat_format)
    if config.cache_dir is not None:
        store_cached(Path(config.cache_dir), "threats", digest, records_to_payload(records))
    return records, digest


def _map_one_threat(
    record: ThreatRecord,
    config: PipelineConfig,
    bundle: CorpusBundle,
    provider: CachingProvider,
    classifiers,
) -> List[MappingResult]:
    document = synthesize_summary(record)
    results: List[MappingResult] = []
    if config.branch in ("ttm", "both"):
        candidates = classify_tactics(document, classifiers, bundle.attack, provider)
        try:
            results.extend(
                map_ttm(
                    document,
                    candidates,
                    bundle.attack,
                    config.cos_thrs,
                    config.filter_kind,
                    provider,
                    threat_title=record.title,
                    preselect=config.preselect,
                )
            )
        except MappingError as exc:
            logger.warning("TTM branch empty for %s: %s", record.threat_id, exc)
    if config.branch in ("tcm", "both"):
        results.extend(
            map_tcm(
                document,
                bundle.capec,
                config.cos_thrs,
                config.filter_kind,
                provider,
                threat_title=record.title,
            )
        )
    return results


def evaluate_gate(
    gate_metric: Optional[str], gate_band: Optional[str], scores: List[ThreatScore]
) -> List[str]:
    """Threat ids whose selected metric band reaches the gate band."""
    if gate_metric is None:
        return []
    threshold = _BAND_ORDER[gate_band]
    failures = []
    for score in scores:
        band_name = score.metric_band(gate_metric)
        if band_name is not None and _BAND_ORDER[band_name] >= threshold:
            failures.append(score.threat_id)
    return failures


@dataclass
class AnalysisOutcome:
    """In-memory results of one analysis pass over a threat list."""

    mappings: List[MappingResult]
    rows: List[ExtractionRow]
    extraction_report: ExtractionReport
    scores: List[ThreatScore]
    risks: Dict[str, QualitativeRisk]
    heatmap: TacticHeatmap
    provider_tag: str


def analyze_records(
    records: List[ThreatRecord],
    bundle: CorpusBundle,
    config: PipelineConfig,
    provider: Optional[CachingProvider] = None,
) -> AnalysisOutcome:
    """Map, extract and score a list of threat records in memory."""
    provider = provider or _build_provider(config)

    if config.branch in ("ttm", "both") and bundle.attack is None:
        raise ConfigError(f"branch {config.branch} requires a loaded ATT&CK snapshot")
    if bundle.capec is None or bundle.store is None or bundle.index is None:
        raise ConfigError("analysis requires loaded CAPEC and NVD corpora")

    classifiers = []
    if config.branch in ("ttm", "both"):
        if config.provider == "service":
            classifiers = [RemoteTacticClassifier(config.endpoint)]
        else:
            top_k = min(config.classifier_top_k, len(bundle.attack.tactics))
            classifiers = [BaselineTacticClassifier(bundle.attack, top_k, provider)]

    ordered = sorted(records, key=lambda r: id_sort_key(r.threat_id))
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            per_threat = list(
                pool.map(
                    lambda record: _map_one_threat(record, config, bundle, provider, classifiers),
                    ordered,
                )
            )
    else:
        per_threat = [
            _map_one_threat(record, config, bundle, provider, classifiers)
            for record in ordered
        ]
    mappings = [result for results in per_threat for result in results]

    scan = ScanConfig(
        mode=config.scan_mode,
        omega=config.omega,
        tau=config.tau,
        cvss_version=config.cvss_version,
    )
    rows, extraction_report = extract_rows(
        mappings,
        bundle.attack if bundle.attack is not None else AttackSnapshot({}, {}),
        bundle.capec,
        bundle.store,
        bundle.index,
        scan,
    )

    rows_by_threat: Dict[str, List[ExtractionRow]] = {}
    for row in rows:
        rows_by_threat.setdefault(row.threat_id, []).append(row)
    scores = [
        score_threat(
            rows_by_threat.get(record.threat_id, []),
            config.cvss_version,
            threat_id=record.threat_id,
        )
        for record in ordered
    ]

    risks: Dict[str, QualitativeRisk] = {}
    for record in ordered:
        if record.severity and record.likelihood:
            risks[record.threat_id] = qualitative_risk(record.severity, record.likelihood)

    heatmap = build_heatmap(
        mappings,
        bundle.attack if bundle.attack is not None else AttackSnapshot({}, {}),
        scores_mode=config.heatmap_mode,
        extraction=rows,
        threat_ids=[record.threat_id for record in ordered],
        tactic_ids=sorted(bundle.attack.tactics) if bundle.attack else [],
    )
    return AnalysisOutcome(
        mappings=mappings,
        rows=rows,
        extraction_report=extraction_report,
        scores=scores,
        risks=risks,
        heatmap=heatmap,
        provider_tag=provider.tag,
    )


def run_pipeline(config: PipelineConfig, annotation: Optional[str] = None) -> PipelineResult:
    """Execute the configured branches end to end and emit all reports."""
    config.validate()
    started = datetime.now(timezone.utc)

    bundle = load_corpora(config)
    records, threats_digest = load_threats(config)
    bundle.hashes["threats"] = threats_digest
    ordered = sorted(records, key=lambda r: id_sort_key(r.threat_id))
    outcome = analyze_records(ordered, bundle, config)
    mappings = outcome.mappings
    rows = outcome.rows
    extraction_report = outcome.extraction_report
    scores = outcome.scores
    risks = outcome.risks
    heatmap = outcome.heatmap

    finished = datetime.now(timezone.utc)
    manifest = RunManifest(
        config=config.echo(),
        corpus_hashes=bundle.hashes,
        corpus_dates=bundle.dates,
        provider_tag=outcome.provider_tag,
        started=started.isoformat(),
        finished=finished.isoformat(),
        per_threat={
            record.threat_id: {
                "rows": extraction_report.rows_per_threat.get(record.threat_id, 0),
                "cves": extraction_report.distinct_cves_per_threat.get(record.threat_id, 0),
            }
            for record in ordered
        },
        annotation=annotation,
    )

    reports = emit_reports(scores, mappings, heatmap, manifest, config.out_dir, risks or None)
    write_rows(
        rows,
        config.cvss_version,
        Path(config.out_dir) / "extraction.csv",
        Path(config.out_dir) / "extraction.pkl",
    )
    reports["extraction.csv"] = Path(config.out_dir) / "extraction.csv"

    gate_failures = evaluate_gate(config.gate_metric, config.gate_band, scores)
    exit_code = EXIT_GATE if gate_failures else EXIT_OK
    if gate_failures:
        logger.warning(
            "gate failed: %s band >= %s for %s",
            config.gate_metric,
            config.gate_band,
            ", ".join(gate_failures),
        )

    return PipelineResult(
        exit_code=exit_code,
        reports=reports,
        scores=scores,
        mappings=mappings,
        rows=rows,
        heatmap=heatmap,
        manifest=manifest,
        extraction_report=extraction_report,
        gate_failures=gate_failures,
    )


def incremental_scan(config: PipelineConfig, last_run: RunManifest) -> PipelineResult:
    """Re-run the pipeline considering only CVEs newer than the last run.

    Equivalent to run_pipeline with tau set to the previous run's end
    date; the manifest is annotated with the delta period.
    """
    if not last_run.finished:
        raise OrcaError("last-run manifest has no finished timestamp")
    try:
        last_date = datetime.fromisoformat(last_run.finished).date()
    except ValueError as exc:
        raise OrcaError(f"unreadable finished timestamp in manifest: {exc}") from exc

    delta_config = PipelineConfig(**{**config.__dict__, "tau": last_date})
    return run_pipeline(delta_config, annotation=f"delta since {last_date.isoformat()}")
