"""Report emission: score tables, mapping listing, tactic heat map, manifest.

All writers produce deterministic bytes for identical inputs: stable id
ordering, fixed decimal formatting, LF newlines, and atomic file
replacement so CI consumers never observe a half-written report.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from orca.corpus.types import AttackSnapshot, id_sort_key
from orca.extraction import ExtractionRow
from orca.mapping import BRANCH_TTM, MappingResult
from orca.scoring import QualitativeRisk, ThreatScore

logger = logging.getLogger(__name__)

HEATMAP_COUNT = "count"
HEATMAP_BASE_SUM = "base_sum"

SCORES_CSV = "scores.csv"
SCORES_JSON = "scores.json"
MAPPINGS_TXT = "mappings.txt"
HEATMAP_CSV = "heatmap.csv"
MANIFEST_JSON = "manifest.json"


def format_similarity(value: float) -> str:
    """Similarity with at least 7 significant digits for the listing."""
    return f"{value:.7g}"


def mapping_line(result: MappingResult) -> str:
    return ";".join(
        [
            result.threat_id,
            result.domain_tag,
            result.threat_title,
            result.target_id,
            format_similarity(result.similarity),
        ]
    )


@dataclass
class TacticHeatmap:
    """Accumulated tactic coverage per threat."""

    rows: List[str]
    columns: List[str]
    cells: List[List[float]]
    mode: str = HEATMAP_COUNT

    def cell(self, threat_id: str, tactic_id: str) -> float:
        return self.cells[self.rows.index(threat_id)][self.columns.index(tactic_id)]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "rows": list(self.rows),
            "columns": list(self.columns),
            "cells": [list(row) for row in self.cells],
        }


@dataclass
class RunManifest:
    """Everything needed to re-run the pipeline bit-identically."""

    config: dict
    corpus_hashes: Dict[str, str] = field(default_factory=dict)
    corpus_dates: Dict[str, Optional[str]] = field(default_factory=dict)
    provider_tag: str = ""
    started: str = ""
    finished: str = ""
    per_threat: Dict[str, dict] = field(default_factory=dict)
    annotation: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "corpus_hashes": dict(self.corpus_hashes),
            "corpus_dates": dict(self.corpus_dates),
            "provider_tag": self.provider_tag,
            "started": self.started,
            "finished": self.finished,
            "per_threat": dict(self.per_threat),
            "annotation": self.annotation,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        return cls(
            config=data.get("config", {}),
            corpus_hashes=data.get("corpus_hashes", {}),
            corpus_dates=data.get("corpus_dates", {}),
            provider_tag=data.get("provider_tag", ""),
            started=data.get("started", ""),
            finished=data.get("finished", ""),
            per_threat=data.get("per_threat", {}),
            annotation=data.get("annotation"),
        )


def build_heatmap(
    mappings: List[MappingResult],
    techniques: AttackSnapshot,
    scores_mode: str = HEATMAP_COUNT,
    extraction: Optional[List[ExtractionRow]] = None,
    threat_ids: Optional[Sequence[str]] = None,
    tactic_ids: Optional[Sequence[str]] = None,
) -> TacticHeatmap:
    """Accumulate technique-branch mappings into a threat x tactic matrix.

    Count mode increments a cell per mapping whose technique lists the
    tactic; base_sum mode instead adds the average base score of the
    threat's extraction rows attributable to the technique's own CAPEC
    links. Row and column label sets default to what the mappings touch
    but can be pinned for a full, all-zero matrix.
    """
    ttm = [m for m in mappings if m.branch == BRANCH_TTM]
    rows = sorted(
        set(threat_ids) if threat_ids is not None else {m.threat_id for m in ttm},
        key=id_sort_key,
    )
    columns = sorted(
        set(tactic_ids) if tactic_ids is not None else set(techniques.tactics),
        key=id_sort_key,
    )
    row_index = {tid: i for i, tid in enumerate(rows)}
    col_index = {tid: i for i, tid in enumerate(columns)}
    cells = [[0.0 for _ in columns] for _ in rows]

    rows_by_threat: Dict[str, List[ExtractionRow]] = {}
    for row in extraction or []:
        rows_by_threat.setdefault(row.threat_id, []).append(row)

    for result in ttm:
        if result.target_id not in techniques.techniques:
            logger.warning("heat map skipping unknown technique %s", result.target_id)
            continue
        entry = techniques.lookup(result.target_id)
        if not entry.tactic_ids:
            logger.warning("heat map skipping technique %s without tactics", result.target_id)
            continue
        if result.threat_id not in row_index:
            continue
        if scores_mode == HEATMAP_COUNT:
            weight = 1.0
        else:
            capecs = set(entry.capec_ids)
            base_scores = [
                row.base
                for row in rows_by_threat.get(result.threat_id, [])
                if row.capec_id in capecs
            ]
            weight = sum(base_scores) / len(base_scores) if base_scores else 0.0
        for tactic_id in entry.tactic_ids:
            if tactic_id in col_index:
                cells[row_index[result.threat_id]][col_index[tactic_id]] += weight

    return TacticHeatmap(rows=rows, columns=columns, cells=cells, mode=scores_mode)


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def _format_cell(value: Optional[float]) -> str:
    if value is None:
        return ""
    return f"{value:.2f}"


def score_record(score: ThreatScore, risk: Optional[QualitativeRisk]) -> dict:
    record = {
        "threat_id": score.threat_id,
        "cvss_version": score.cvss_version,
        "avg_impact": score.rounded("impact"),
        "avg_exploitability": score.rounded("exploitability"),
        "avg_base": score.rounded("base"),
        "band_impact": score.band_impact,
        "band_exploitability": score.band_exploitability,
        "band_base": score.band_base,
        "cve_count": score.cve_count,
        "scoreable": score.scoreable,
    }
    if risk is not None:
        record["severity"] = risk.severity
        record["likelihood"] = risk.likelihood
        record["risk"] = risk.risk
    return record


def scores_to_csv(
    scores: List[ThreatScore], risks: Optional[Dict[str, QualitativeRisk]] = None
) -> str:
    risks = risks or {}
    header = [
        "threat_id",
        "cvss_version",
        "avg_impact",
        "avg_exploitability",
        "avg_base",
        "band_impact",
        "band_exploitability",
        "band_base",
        "cve_count",
        "scoreable",
    ]
    with_risk = bool(risks)
    if with_risk:
        header += ["severity", "likelihood", "risk"]
    lines = [",".join(header)]
    for score in sorted(scores, key=lambda s: id_sort_key(s.threat_id)):
        row = [
            score.threat_id,
            score.cvss_version,
            _format_cell(score.rounded("impact")),
            _format_cell(score.rounded("exploitability")),
            _format_cell(score.rounded("base")),
            score.band_impact or "",
            score.band_exploitability or "",
            score.band_base or "",
            str(score.cve_count),
            "true" if score.scoreable else "false",
        ]
        if with_risk:
            risk = risks.get(score.threat_id)
            row += (
                [risk.severity, risk.likelihood, str(risk.risk)]
                if risk
                else ["", "", ""]
            )
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def scores_to_json(
    scores: List[ThreatScore], risks: Optional[Dict[str, QualitativeRisk]] = None
) -> str:
    risks = risks or {}
    ordered = sorted(scores, key=lambda s: id_sort_key(s.threat_id))
    records = [score_record(score, risks.get(score.threat_id)) for score in ordered]
    return json.dumps(records, indent=2, ensure_ascii=False) + "\n"


def heatmap_to_csv(heatmap: TacticHeatmap) -> str:
    lines = [",".join(["threat_id", *heatmap.columns])]
    for threat_id, row in zip(heatmap.rows, heatmap.cells):
        formatted = [
            str(int(value)) if heatmap.mode == HEATMAP_COUNT else f"{value:.2f}"
            for value in row
        ]
        lines.append(",".join([threat_id, *formatted]))
    return "\n".join(lines) + "\n"


def mappings_to_text(mappings: List[MappingResult]) -> str:
    ordered = sorted(
        mappings,
        key=lambda m: (
            id_sort_key(m.threat_id),
            m.branch,
            -m.similarity,
            id_sort_key(m.target_id),
        ),
    )
    lines = [mapping_line(result) for result in ordered]
    return "\n".join(lines) + ("\n" if lines else "")


def emit_reports(
    scores: List[ThreatScore],
    mappings: List[MappingResult],
    heatmap: TacticHeatmap,
    manifest: RunManifest,
    out_dir: Path,
    risks: Optional[Dict[str, QualitativeRisk]] = None,
) -> Dict[str, Path]:
    """Write the full report set; bytes are deterministic per inputs.

    The manifest is always emitted. Raises before writing anything when
    the destination is not a writable directory.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise PermissionError(f"output directory {out_dir} is not writable")

    outputs = {
        SCORES_CSV: scores_to_csv(scores, risks),
        SCORES_JSON: scores_to_json(scores, risks),
        MAPPINGS_TXT: mappings_to_text(mappings),
        HEATMAP_CSV: heatmap_to_csv(heatmap),
        MANIFEST_JSON: json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n",
    }
    written = {}
    for name, data in outputs.items():
        path = out_dir / name
        _atomic_write(path, data)
        written[name] = path
    logger.info("wrote %d report files to %s", len(written), out_dir)
    return written
