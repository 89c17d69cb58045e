"""Structured threat-list parsing and summary paragraph synthesis.

The summary paragraph is the x1 side of every similarity comparison:
contextual phrases are prepended to the title and description so the
sentence embedding receives one continuous, standardized text.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from typing import IO, List, Optional, Union

from orca.errors import ThreatInputError

# Field names of the threat input schema (JSON keys / CSV header).
FIELD_ID = "Threat ID"
FIELD_TITLE = "Threat title"
FIELD_DESCRIPTION = "Threat Description"
FIELD_AGENT = "Threat agent"
FIELD_VULNERABILITY = "Vulnerability"
FIELD_ASSET = "Threatened Asset"
FIELD_COMPONENTS = "Affected Components"
FIELD_SEVERITY = "Severity"
FIELD_LIKELIHOOD = "Likelihood"

SUMMARY_TITLE_PHRASE = "A Threat with the title "
SUMMARY_DESCRIPTION_PHRASE = " and the description "

# Semicolon keeps CSV list cells from colliding with comma-separated assets.
CSV_LIST_DELIMITER = ";"

_WHITESPACE = re.compile(r"\s+")

Document = Union[bytes, str, IO[bytes]]
TextOrList = Union[str, List[str]]


@dataclass
class ThreatRecord:
    """One entry of the structured threat list."""

    threat_id: str
    title: str
    description: str
    threat_agent: str = ""
    vulnerabilities: List[str] = field(default_factory=list)
    threatened_assets: TextOrList = ""
    affected_components: TextOrList = ""
    severity: Optional[str] = None
    likelihood: Optional[str] = None

    def to_dict(self) -> dict:
        data = {
            FIELD_ID: self.threat_id,
            FIELD_TITLE: self.title,
            FIELD_DESCRIPTION: self.description,
            FIELD_AGENT: self.threat_agent,
            FIELD_VULNERABILITY: list(self.vulnerabilities),
            FIELD_ASSET: self.threatened_assets,
            FIELD_COMPONENTS: self.affected_components,
        }
        if self.severity is not None:
            data[FIELD_SEVERITY] = self.severity
        if self.likelihood is not None:
            data[FIELD_LIKELIHOOD] = self.likelihood
        return data


@dataclass
class ThreatDocument:
    """Synthesized text paragraph for one threat, plus its embedding."""

    threat_id: str
    summary: str
    embedding: Optional[object] = None


def _normalize_space(text: str) -> str:
    return _WHITESPACE.sub(" ", text).strip()


def _as_list(value, *, split_csv: bool = False) -> List[str]:
    if value is None:
        return []
    if isinstance(value, list):
        return [str(item).strip() for item in value if str(item).strip()]
    text = str(value).strip()
    if not text:
        return []
    if split_csv:
        return [part.strip() for part in text.split(CSV_LIST_DELIMITER) if part.strip()]
    return [text]


def _build_record(entry: dict, *, from_csv: bool) -> ThreatRecord:
    threat_id = str(entry.get(FIELD_ID, "") or "").strip()
    if not threat_id:
        raise ThreatInputError(f"threat entry without a '{FIELD_ID}' value")
    for field_name in (FIELD_TITLE, FIELD_DESCRIPTION):
        if not str(entry.get(field_name, "") or "").strip():
            raise ThreatInputError(f"threat {threat_id} is missing '{field_name}'")

    def passthrough(key) -> TextOrList:
        value = entry.get(key, "")
        if isinstance(value, list):
            return [str(item) for item in value]
        return str(value) if value is not None else ""

    return ThreatRecord(
        threat_id=threat_id,
        title=str(entry[FIELD_TITLE]),
        description=str(entry[FIELD_DESCRIPTION]),
        threat_agent=str(entry.get(FIELD_AGENT, "") or ""),
        vulnerabilities=_as_list(entry.get(FIELD_VULNERABILITY), split_csv=from_csv),
        threatened_assets=passthrough(FIELD_ASSET),
        affected_components=passthrough(FIELD_COMPONENTS),
        severity=str(entry[FIELD_SEVERITY]) if entry.get(FIELD_SEVERITY) else None,
        likelihood=str(entry[FIELD_LIKELIHOOD]) if entry.get(FIELD_LIKELIHOOD) else None,
    )


def parse_threats(document: Document, format: str) -> List[ThreatRecord]:
    """Parse a JSON or CSV threat list into records.

    JSON input is an array of objects keyed by the schema field names;
    CSV input carries the same names in its header row, with list cells
    separated by semicolons. Duplicate or missing mandatory fields raise
    ThreatInputError naming the offending threat.
    """
    if hasattr(document, "read"):
        document = document.read()
    if isinstance(document, bytes):
        document = document.decode("utf-8")

    if format == "json":
        try:
            entries = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ThreatInputError(f"threat JSON failed to parse: {exc}") from exc
        if not isinstance(entries, list):
            raise ThreatInputError("threat JSON must be an array of objects")
        records = [_build_record(entry, from_csv=False) for entry in entries]
    elif format == "csv":
        reader = csv.DictReader(io.StringIO(document))
        records = [_build_record(row, from_csv=True) for row in reader]
    else:
        raise ThreatInputError(f"unsupported threat format {format!r}")

    seen = set()
    for record in records:
        if record.threat_id in seen:
            raise ThreatInputError(f"duplicate threat id {record.threat_id}")
        seen.add(record.threat_id)
    return records


def serialize_threats(records: List[ThreatRecord]) -> str:
    """JSON serialization that parse_threats reads back unchanged."""
    return json.dumps([r.to_dict() for r in records], indent=2, ensure_ascii=False)


def records_to_payload(records: List[ThreatRecord]) -> dict:
    """Cacheable snapshot of parsed records plus synthesized summaries."""
    return {
        "records": [record.to_dict() for record in records],
        "summaries": {
            record.threat_id: synthesize_summary(record).summary for record in records
        },
    }


def records_from_payload(payload: dict) -> List[ThreatRecord]:
    return [_build_record(entry, from_csv=False) for entry in payload["records"]]


def synthesize_summary(record: ThreatRecord) -> ThreatDocument:
    """Build the standardized text paragraph for one threat.

    Only the title and description enter the paragraph; runs of internal
    whitespace are collapsed so the embedding input is deterministic.
    """
    summary = (
        SUMMARY_TITLE_PHRASE
        + _normalize_space(record.title)
        + SUMMARY_DESCRIPTION_PHRASE
        + _normalize_space(record.description)
    )
    return ThreatDocument(threat_id=record.threat_id, summary=summary)
