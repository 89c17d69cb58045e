"""CAPEC expansion and CWE/CVE extraction into flattened rows.

Mapped targets seed a CAPEC set per threat; Deep mode widens the seeds
over the attack-pattern graph before the CAPEC -> CWE -> CVE walk emits
one row per path that survives the uniqueness and inclusion-period
filters.
"""

from __future__ import annotations

import csv
import io
import logging
import pickle
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, List, Set

from orca.corpus.types import (
    AttackSnapshot,
    CapecSnapshot,
    CweIndex,
    VulnStore,
    id_sort_key,
)
from orca.errors import ExtractionError
from orca.mapping import BRANCH_TTM, MappingResult

logger = logging.getLogger(__name__)

MODE_NORMAL = "normal"
MODE_DEEP = "deep"

EXTRACTION_CACHE_VERSION = 1
_PICKLE_PROTOCOL = 4


@dataclass(frozen=True)
class ScanConfig:
    """Extraction tuning: scan mode, uniqueness, inclusion period, version."""

    mode: str = MODE_NORMAL
    omega: bool = False
    tau: date = date(1998, 1, 1)
    cvss_version: str = "v2"

    def __post_init__(self):
        if self.mode not in (MODE_NORMAL, MODE_DEEP):
            raise ValueError(f"unknown scan mode {self.mode!r}")
        if self.cvss_version not in ("v2", "v3", "v4"):
            raise ValueError(f"unknown CVSS version {self.cvss_version!r}")
        if self.tau < date(1988, 1, 1):
            raise ValueError("tau must not predate 1988-01-01")


@dataclass(frozen=True)
class ExtractionRow:
    """One (threat, CAPEC, CWE, CVE) path with its Base Score Metrics."""

    threat_id: str
    cve_id: str
    cwe_id: str
    capec_id: str
    impact: float
    exploitability: float
    base: float
    published: datetime


@dataclass
class ExtractionReport:
    """Side counts: what was expanded, skipped, or left unscoreable."""

    capecs_per_threat: Dict[str, int] = field(default_factory=dict)
    rows_per_threat: Dict[str, int] = field(default_factory=dict)
    distinct_cves_per_threat: Dict[str, int] = field(default_factory=dict)
    threats_without_rows: List[str] = field(default_factory=list)
    unscoreable_cves: int = 0
    tau_excluded: int = 0
    unresolved_seeds: List[str] = field(default_factory=list)


def expand_capecs(
    seed_capecs: Set[str], patterns: CapecSnapshot, mode: str
) -> Set[str]:
    """Widen a seed CAPEC set according to the scan mode.

    Normal mode returns the seeds unchanged. Deep mode takes the
    transitive closure over parent_of (cycle-safe) and adds the one-hop
    can_precede targets of every CAPEC reached. Deprecated patterns are
    never traversed into.
    """
    for seed in seed_capecs:
        if seed not in patterns:
            raise ExtractionError(f"seed CAPEC {seed} not present in the snapshot")
    if mode == MODE_NORMAL:
        return set(seed_capecs)
    if mode != MODE_DEEP:
        raise ExtractionError(f"unknown scan mode {mode!r}")

    closure: Set[str] = set()
    stack = list(seed_capecs)
    while stack:
        capec_id = stack.pop()
        if capec_id in closure:
            continue
        closure.add(capec_id)
        for child in patterns.lookup(capec_id).parent_of:
            if child in patterns and not patterns.lookup(child).deprecated:
                stack.append(child)

    expanded = set(closure)
    for capec_id in closure:
        for successor in patterns.lookup(capec_id).can_precede:
            if successor in patterns and not patterns.lookup(successor).deprecated:
                expanded.add(successor)
    return expanded


def _seed_capecs_for_threat(
    results: List[MappingResult],
    techniques: AttackSnapshot,
    patterns: CapecSnapshot,
    report: ExtractionReport,
) -> Set[str]:
    seeds: Set[str] = set()
    for result in results:
        if result.branch == BRANCH_TTM:
            if result.target_id not in techniques.techniques:
                raise ExtractionError(
                    f"mapped technique {result.target_id} not present in the snapshot"
                )
            candidates = techniques.lookup(result.target_id).capec_ids
        else:
            candidates = [result.target_id]
        for capec_id in candidates:
            if capec_id not in patterns:
                report.unresolved_seeds.append(capec_id)
                logger.warning(
                    "seed CAPEC %s from %s is not in the CAPEC snapshot, dropped",
                    capec_id,
                    result.target_id,
                )
            elif patterns.lookup(capec_id).deprecated:
                report.unresolved_seeds.append(capec_id)
                logger.warning(
                    "seed CAPEC %s from %s is deprecated, dropped", capec_id, result.target_id
                )
            else:
                seeds.add(capec_id)
    return seeds


def extract_rows(
    mappings: List[MappingResult],
    techniques: AttackSnapshot,
    patterns: CapecSnapshot,
    store: VulnStore,
    index: CweIndex,
    config: ScanConfig,
) -> tuple[List[ExtractionRow], ExtractionReport]:
    """Expand every threat's mapped targets into scored extraction rows.

    Rows walk CAPEC -> CWE -> CVE in a deterministic id order; omega
    deduplicates per (threat, CVE) keeping the first path, tau drops CVEs
    published before the inclusion date, and CVEs without metrics for the
    configured CVSS version are tallied instead of emitted.
    """
    report = ExtractionReport()
    tau_start = datetime.combine(config.tau, datetime.min.time(), tzinfo=timezone.utc)

    by_threat: Dict[str, List[MappingResult]] = {}
    for result in mappings:
        by_threat.setdefault(result.threat_id, []).append(result)

    rows: List[ExtractionRow] = []
    for threat_id in sorted(by_threat, key=id_sort_key):
        seeds = _seed_capecs_for_threat(by_threat[threat_id], techniques, patterns, report)
        expanded = expand_capecs(seeds, patterns, config.mode) if seeds else set()
        report.capecs_per_threat[threat_id] = len(expanded)

        threat_rows: List[ExtractionRow] = []
        seen_cves: Set[str] = set()
        for capec_id in sorted(expanded, key=id_sort_key):
            pattern = patterns.lookup(capec_id)
            for cwe_id in sorted(pattern.related_cwes, key=id_sort_key):
                for cve_id in index.cves_for(cwe_id):
                    record = store.lookup(cve_id)
                    if record.published < tau_start:
                        report.tau_excluded += 1
                        continue
                    metrics = record.metrics(config.cvss_version)
                    if metrics is None:
                        report.unscoreable_cves += 1
                        continue
                    if config.omega:
                        if cve_id in seen_cves:
                            continue
                        seen_cves.add(cve_id)
                    threat_rows.append(
                        ExtractionRow(
                            threat_id=threat_id,
                            cve_id=cve_id,
                            cwe_id=cwe_id,
                            capec_id=capec_id,
                            impact=metrics.impact,
                            exploitability=metrics.exploitability,
                            base=metrics.base,
                            published=record.published,
                        )
                    )

        report.rows_per_threat[threat_id] = len(threat_rows)
        report.distinct_cves_per_threat[threat_id] = len(
            {row.cve_id for row in threat_rows}
        )
        if not threat_rows:
            report.threats_without_rows.append(threat_id)
            logger.info("threat %s yielded no extraction rows", threat_id)
        rows.extend(threat_rows)

    return rows, report


def _score_columns(version: str) -> List[str]:
    return [
        f"{version}_impactScore",
        f"{version}_exploitabilityScore",
        f"{version}_baseScore",
    ]


def _format_score(value: float) -> str:
    return f"{value:g}"


def rows_to_csv(rows: Iterable[ExtractionRow], version: str) -> str:
    """Render rows as the columnar extraction table."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["threat_id", "cve_id", "cwe_id", "capec_id", *_score_columns(version), "published"])
    for row in rows:
        writer.writerow(
            [
                row.threat_id,
                row.cve_id,
                row.cwe_id,
                row.capec_id,
                _format_score(row.impact),
                _format_score(row.exploitability),
                _format_score(row.base),
                row.published.strftime("%Y-%m-%dT%H:%M:%SZ"),
            ]
        )
    return buffer.getvalue()


def write_rows(rows: List[ExtractionRow], version: str, csv_path: Path, cache_path: Path) -> None:
    """Persist rows as CSV plus a binary cache for fast re-loading."""
    Path(csv_path).write_text(rows_to_csv(rows, version), encoding="utf-8", newline="\n")
    payload = {"version": EXTRACTION_CACHE_VERSION, "cvss_version": version, "rows": rows}
    Path(cache_path).write_bytes(pickle.dumps(payload, protocol=_PICKLE_PROTOCOL))


def read_rows(cache_path: Path) -> List[ExtractionRow]:
    """Load rows back from the binary cache."""
    payload = pickle.loads(Path(cache_path).read_bytes())
    if payload.get("version") != EXTRACTION_CACHE_VERSION:
        raise ExtractionError(
            f"extraction cache version {payload.get('version')} unsupported"
        )
    return payload["rows"]
