"""CAPEC STIX 2.x bundle ingestion."""

from __future__ import annotations

import json
import logging
from typing import IO, Dict, List, Tuple, Union

from orca.corpus.types import AttackPattern, CapecSnapshot
from orca.errors import CorpusParseError, EmptyCorpusError

logger = logging.getLogger(__name__)

Document = Union[bytes, str, IO[bytes]]


def _read_bundle(document: Document, corpus: str) -> dict:
    if hasattr(document, "read"):
        document = document.read()
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        bundle = json.loads(document)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorpusParseError(f"{corpus} bundle is not valid JSON: {exc}") from exc
    if not isinstance(bundle, dict) or "objects" not in bundle:
        raise CorpusParseError(f"{corpus} document is not a STIX bundle (no 'objects')")
    return bundle


def _external_id(obj: dict, source_name: str) -> str | None:
    for ref in obj.get("external_references", []):
        if ref.get("source_name") == source_name and ref.get("external_id"):
            return ref["external_id"]
    return None


def _external_ids(obj: dict, source_name: str) -> List[str]:
    ids = []
    for ref in obj.get("external_references", []):
        if ref.get("source_name") == source_name and ref.get("external_id"):
            ids.append(ref["external_id"])
    return list(dict.fromkeys(ids))


def _latest_modified(objects: list) -> str | None:
    stamps = [obj.get("modified") for obj in objects if obj.get("modified")]
    return max(stamps) if stamps else None


def _resolve_refs(
    refs: List[str], stix_to_capec: Dict[str, str], owner: str, dangling: List[str]
) -> List[str]:
    resolved = []
    for ref in refs:
        capec_id = stix_to_capec.get(ref)
        if capec_id is None:
            dangling.append(f"{owner} -> {ref}")
            logger.warning("dangling CAPEC reference %s -> %s (skipped)", owner, ref)
        else:
            resolved.append(capec_id)
    return resolved


def load_capec(document: Document) -> CapecSnapshot:
    """Parse a CAPEC STIX bundle into a snapshot of attack patterns.

    Deprecated patterns are retained but flagged; dangling parent/precede
    references are recorded on the snapshot and skipped.
    """
    bundle = _read_bundle(document, "CAPEC")
    raw_patterns: List[Tuple[str, dict]] = []
    for obj in bundle.get("objects", []):
        if obj.get("type") != "attack-pattern":
            continue
        capec_id = _external_id(obj, "capec")
        if capec_id is None:
            raise CorpusParseError(
                f"attack-pattern {obj.get('id', '<no id>')} has no CAPEC external id",
                object_id=obj.get("id"),
            )
        raw_patterns.append((capec_id, obj))

    if not raw_patterns:
        raise EmptyCorpusError("CAPEC bundle contains no attack-pattern objects")

    stix_to_capec = {obj["id"]: capec_id for capec_id, obj in raw_patterns if "id" in obj}

    dangling: List[str] = []
    patterns: Dict[str, AttackPattern] = {}
    for capec_id, obj in raw_patterns:
        deprecated = (
            obj.get("x_capec_status", "").lower() == "deprecated"
            or bool(obj.get("revoked"))
        )
        patterns[capec_id] = AttackPattern(
            capec_id=capec_id,
            name=obj.get("name", ""),
            description=obj.get("description", ""),
            parent_of=_resolve_refs(
                obj.get("x_capec_parent_of_refs", []), stix_to_capec, capec_id, dangling
            ),
            can_precede=_resolve_refs(
                obj.get("x_capec_can_precede_refs", []), stix_to_capec, capec_id, dangling
            ),
            related_cwes=_external_ids(obj, "cwe"),
            deprecated=deprecated,
        )

    logger.info(
        "loaded %d CAPEC patterns (%d deprecated, %d dangling refs)",
        len(patterns),
        sum(1 for p in patterns.values() if p.deprecated),
        len(dangling),
    )
    return CapecSnapshot(
        patterns=patterns,
        domain="capec",
        snapshot_date=_latest_modified(bundle.get("objects", [])),
        dangling_refs=dangling,
    )
