"""Domain types for the security corpora and their snapshot containers."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Dict, Iterator, List, Optional

_ID_CHUNKS = re.compile(r"(\d+)")

# Records published before this date are rejected as malformed.
EARLIEST_PUBLISHED = datetime(1988, 1, 1, tzinfo=timezone.utc)


def id_sort_key(identifier: str):
    """Natural sort key for mixed identifiers (CAPEC-122 < CAPEC-600, T1078 < T1078.004)."""
    return tuple(
        int(chunk) if chunk.isdigit() else chunk
        for chunk in _ID_CHUNKS.split(identifier)
    )


def parse_timestamp(value: str) -> datetime:
    """Parse a feed timestamp into an aware UTC datetime.

    Accepts ISO-8601 with or without fractional seconds and a trailing
    'Z'; naive values are taken as UTC.
    """
    raw = value.strip()
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    parsed = datetime.fromisoformat(raw)
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


@dataclass(frozen=True)
class AttackPattern:
    """One CAPEC attack pattern with its graph references."""

    capec_id: str
    name: str
    description: str
    parent_of: List[str] = field(default_factory=list)
    can_precede: List[str] = field(default_factory=list)
    related_cwes: List[str] = field(default_factory=list)
    deprecated: bool = False

    def to_dict(self) -> dict:
        return {
            "capec_id": self.capec_id,
            "name": self.name,
            "description": self.description,
            "parent_of": list(self.parent_of),
            "can_precede": list(self.can_precede),
            "related_cwes": list(self.related_cwes),
            "deprecated": self.deprecated,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AttackPattern":
        return cls(**data)


@dataclass
class CapecSnapshot:
    """Immutable view over the ingested CAPEC attack patterns."""

    patterns: Dict[str, AttackPattern]
    domain: str = "capec"
    snapshot_date: Optional[str] = None
    dangling_refs: List[str] = field(default_factory=list)

    def lookup(self, capec_id: str) -> AttackPattern:
        return self.patterns[capec_id]

    def __contains__(self, capec_id: str) -> bool:
        return capec_id in self.patterns

    def __len__(self) -> int:
        return len(self.patterns)

    def active(self) -> Iterator[AttackPattern]:
        """Patterns that participate in mapping and traversal."""
        for capec_id in sorted(self.patterns, key=id_sort_key):
            pattern = self.patterns[capec_id]
            if not pattern.deprecated:
                yield pattern

    def to_dict(self) -> dict:
        return {
            "domain": self.domain,
            "snapshot_date": self.snapshot_date,
            "dangling_refs": list(self.dangling_refs),
            "patterns": [
                self.patterns[pid].to_dict()
                for pid in sorted(self.patterns, key=id_sort_key)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CapecSnapshot":
        patterns = {
            entry["capec_id"]: AttackPattern.from_dict(entry)
            for entry in data["patterns"]
        }
        return cls(
            patterns=patterns,
            domain=data.get("domain", "capec"),
            snapshot_date=data.get("snapshot_date"),
            dangling_refs=list(data.get("dangling_refs", [])),
        )


@dataclass(frozen=True)
class TacticEntry:
    """One ATT&CK tactic."""

    tactic_id: str
    name: str
    description: str

    def to_dict(self) -> dict:
        return {
            "tactic_id": self.tactic_id,
            "name": self.name,
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TacticEntry":
        return cls(**data)


@dataclass
class TechniqueEntry:
    """One ATT&CK technique, optionally enriched with 5G addenda."""

    technique_id: str
    name: str
    description: str
    tactic_ids: List[str] = field(default_factory=list)
    capec_ids: List[str] = field(default_factory=list)
    addenda: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "technique_id": self.technique_id,
            "name": self.name,
            "description": self.description,
            "tactic_ids": list(self.tactic_ids),
            "capec_ids": list(self.capec_ids),
            "addenda": list(self.addenda),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TechniqueEntry":
        return cls(**data)


@dataclass
class AttackSnapshot:
    """Immutable view over ATT&CK techniques and tactics."""

    techniques: Dict[str, TechniqueEntry]
    tactics: Dict[str, TacticEntry]
    domain: str = "enterprise-attack"
    snapshot_date: Optional[str] = None

    def lookup(self, technique_id: str) -> TechniqueEntry:
        return self.techniques[technique_id]

    def tactic(self, tactic_id: str) -> TacticEntry:
        return self.tactics[tactic_id]

    def __len__(self) -> int:
        return len(self.techniques)

    def sorted_techniques(self) -> List[TechniqueEntry]:
        return [
            self.techniques[tid]
            for tid in sorted(self.techniques, key=id_sort_key)
        ]

    def sorted_tactics(self) -> List[TacticEntry]:
        return [self.tactics[tid] for tid in sorted(self.tactics, key=id_sort_key)]

    def to_dict(self) -> dict:
        return {
            "domain": self.domain,
            "snapshot_date": self.snapshot_date,
            "techniques": [t.to_dict() for t in self.sorted_techniques()],
            "tactics": [t.to_dict() for t in self.sorted_tactics()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AttackSnapshot":
        return cls(
            techniques={
                entry["technique_id"]: TechniqueEntry.from_dict(entry)
                for entry in data["techniques"]
            },
            tactics={
                entry["tactic_id"]: TacticEntry.from_dict(entry)
                for entry in data["tactics"]
            },
            domain=data.get("domain", "enterprise-attack"),
            snapshot_date=data.get("snapshot_date"),
        )


@dataclass(frozen=True)
class BaseScoreMetrics:
    """CVSS Base Score Metrics: impact, exploitability and base sub-scores."""

    impact: float
    exploitability: float
    base: float

    def __post_init__(self):
        for name in ("impact", "exploitability", "base"):
            value = getattr(self, name)
            if not 0.0 <= value <= 10.0:
                raise ValueError(f"{name} score {value} outside [0, 10]")

    def to_dict(self) -> dict:
        return {
            "impact": self.impact,
            "exploitability": self.exploitability,
            "base": self.base,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BaseScoreMetrics":
        return cls(**data)


@dataclass
class VulnerabilityRecord:
    """One CVE with its CWE links and per-version Base Score Metrics."""

    cve_id: str
    cwe_ids: List[str] = field(default_factory=list)
    published: datetime = EARLIEST_PUBLISHED
    cvss_v2: Optional[BaseScoreMetrics] = None
    cvss_v3: Optional[BaseScoreMetrics] = None
    cvss_v4: Optional[BaseScoreMetrics] = None

    @property
    def scoreable(self) -> bool:
        return any((self.cvss_v2, self.cvss_v3, self.cvss_v4))

    def metrics(self, version: str) -> Optional[BaseScoreMetrics]:
        """BSM for 'v2', 'v3' or 'v4', or None when the feed lacked it."""
        return {"v2": self.cvss_v2, "v3": self.cvss_v3, "v4": self.cvss_v4}[version]

    def to_dict(self) -> dict:
        return {
            "cve_id": self.cve_id,
            "cwe_ids": list(self.cwe_ids),
            "published": self.published.isoformat(),
            "cvss_v2": self.cvss_v2.to_dict() if self.cvss_v2 else None,
            "cvss_v3": self.cvss_v3.to_dict() if self.cvss_v3 else None,
            "cvss_v4": self.cvss_v4.to_dict() if self.cvss_v4 else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VulnerabilityRecord":
        def bsm(entry):
            return BaseScoreMetrics.from_dict(entry) if entry else None

        return cls(
            cve_id=data["cve_id"],
            cwe_ids=list(data["cwe_ids"]),
            published=parse_timestamp(data["published"]),
            cvss_v2=bsm(data.get("cvss_v2")),
            cvss_v3=bsm(data.get("cvss_v3")),
            cvss_v4=bsm(data.get("cvss_v4")),
        )


@dataclass
class VulnStore:
    """CVE records keyed by id."""

    records: Dict[str, VulnerabilityRecord]
    snapshot_date: Optional[str] = None

    def lookup(self, cve_id: str) -> VulnerabilityRecord:
        return self.records[cve_id]

    def __contains__(self, cve_id: str) -> bool:
        return cve_id in self.records

    def __len__(self) -> int:
        return len(self.records)

    def to_dict(self) -> dict:
        return {
            "snapshot_date": self.snapshot_date,
            "records": [
                self.records[cid].to_dict()
                for cid in sorted(self.records, key=id_sort_key)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VulnStore":
        return cls(
            records={
                entry["cve_id"]: VulnerabilityRecord.from_dict(entry)
                for entry in data["records"]
            },
            snapshot_date=data.get("snapshot_date"),
        )


class CweIndex:
    """Inverted index: CWE id -> set of CVE ids that list it."""

    def __init__(self, mapping: Dict[str, set] | None = None):
        self._mapping: Dict[str, set] = mapping or {}

    @classmethod
    def from_store(cls, store: VulnStore) -> "CweIndex":
        mapping: Dict[str, set] = {}
        for record in store.records.values():
            for cwe_id in record.cwe_ids:
                mapping.setdefault(cwe_id, set()).add(record.cve_id)
        return cls(mapping)

    def cves_for(self, cwe_id: str) -> List[str]:
        """CVE ids for a CWE in deterministic order; empty when unknown."""
        return sorted(self._mapping.get(cwe_id, ()), key=id_sort_key)

    def __contains__(self, cwe_id: str) -> bool:
        return cwe_id in self._mapping

    def __len__(self) -> int:
        return len(self._mapping)

    def items(self):
        for cwe_id in sorted(self._mapping, key=id_sort_key):
            yield cwe_id, self.cves_for(cwe_id)

    def to_dict(self) -> dict:
        return {cwe: self.cves_for(cwe) for cwe, _ in self.items()}

    @classmethod
    def from_dict(cls, data: dict) -> "CweIndex":
        return cls({cwe: set(cves) for cwe, cves in data.items()})
