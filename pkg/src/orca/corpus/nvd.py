"""NVD JSON feed ingestion (API/feed schema 2.0).

Each feed document is a mapping with a ``vulnerabilities`` list of
``{"cve": {...}}`` wrappers. Per CVE we keep the publication timestamp,
the CWE links and the Base Score Metrics of every CVSS version that
provides all three sub-scores (impact, exploitability, base).
"""

from __future__ import annotations

import json
import logging
import re
from typing import IO, Dict, Iterable, Optional, Tuple, Union

from orca.corpus.types import (
    EARLIEST_PUBLISHED,
    BaseScoreMetrics,
    CweIndex,
    VulnerabilityRecord,
    VulnStore,
    parse_timestamp,
)
from orca.errors import EmptyCorpusError

logger = logging.getLogger(__name__)

Document = Union[bytes, str, IO[bytes]]

_CWE_ID = re.compile(r"^CWE-\d+$")

# v3 prefers the 3.1 records over 3.0 when both are present.
_METRIC_KEYS = {
    "v2": ("cvssMetricV2",),
    "v3": ("cvssMetricV31", "cvssMetricV30"),
    "v4": ("cvssMetricV40",),
}


def _pick_metric_entry(entries: list) -> Optional[dict]:
    for entry in entries:
        if entry.get("type") == "Primary":
            return entry
    return entries[0] if entries else None


def _metrics_for(metrics: dict, version: str) -> Optional[BaseScoreMetrics]:
    for key in _METRIC_KEYS[version]:
        entry = _pick_metric_entry(metrics.get(key, []))
        if entry is None:
            continue
        base = entry.get("cvssData", {}).get("baseScore")
        impact = entry.get("impactScore")
        exploitability = entry.get("exploitabilityScore")
        if base is None or impact is None or exploitability is None:
            continue
        return BaseScoreMetrics(
            impact=float(impact),
            exploitability=float(exploitability),
            base=float(base),
        )
    return None


def _cwe_ids(cve: dict) -> list:
    found = set()
    for weakness in cve.get("weaknesses", []):
        for description in weakness.get("description", []):
            value = description.get("value", "")
            if _CWE_ID.match(value):
                found.add(value)
    return sorted(found)


def _parse_entry(item: dict) -> VulnerabilityRecord:
    cve = item.get("cve", item)
    cve_id = cve["id"]
    published = parse_timestamp(cve["published"])
    if published < EARLIEST_PUBLISHED:
        raise ValueError(f"published date {published.date()} predates 1988-01-01")
    metrics = cve.get("metrics", {})
    return VulnerabilityRecord(
        cve_id=cve_id,
        cwe_ids=_cwe_ids(cve),
        published=published,
        cvss_v2=_metrics_for(metrics, "v2"),
        cvss_v3=_metrics_for(metrics, "v3"),
        cvss_v4=_metrics_for(metrics, "v4"),
    )


def load_nvd(feed_documents: Iterable[Document]) -> Tuple[VulnStore, CweIndex]:
    """Parse a sequence of NVD 2.0 feed documents into a record store.

    Later feeds overwrite earlier entries for the same CVE id. Malformed
    entries are skipped with a logged warning; a run that parses nothing
    at all is an error.
    """
    records: Dict[str, VulnerabilityRecord] = {}
    snapshot_date = None
    parsed = skipped = 0
    for document in feed_documents:
        if hasattr(document, "read"):
            document = document.read()
        if isinstance(document, bytes):
            document = document.decode("utf-8")
        try:
            feed = json.loads(document)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            logger.warning("skipping unparseable NVD feed document: %s", exc)
            skipped += 1
            continue
        if feed.get("timestamp"):
            snapshot_date = feed["timestamp"]
        for item in feed.get("vulnerabilities", []):
            try:
                record = _parse_entry(item)
            except (KeyError, TypeError, ValueError) as exc:
                cve_id = item.get("cve", {}).get("id", "<no id>") if isinstance(item, dict) else "<no id>"
                logger.warning("skipping malformed NVD entry %s: %s", cve_id, exc)
                skipped += 1
                continue
            records[record.cve_id] = record
            parsed += 1

    if not records:
        raise EmptyCorpusError("no parseable CVE entries in the NVD feed input")

    unscoreable = sum(1 for r in records.values() if not r.scoreable)
    logger.info(
        "loaded %d CVE records (%d entries parsed, %d skipped, %d unscoreable)",
        len(records),
        parsed,
        skipped,
        unscoreable,
    )
    store = VulnStore(records=records, snapshot_date=snapshot_date)
    return store, CweIndex.from_store(store)
