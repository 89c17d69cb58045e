"""FiGHT YAML preparation: technique filtering and addendum merge.

The accepted layout is a mapping with a ``techniques`` list. Each entry
is matched to ATT&CK solely through its explicit cross-reference field
(``attack-id`` or ``attack_id``), never by name similarity. Addenda are
read from ``addendums`` / ``addenda`` / ``addendum``; items may be bare
strings or mappings carrying a ``text`` / ``value`` / ``description`` key.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import IO, List, Union

import yaml

from orca.corpus.types import AttackSnapshot
from orca.errors import CorpusParseError, EmptyCorpusError

logger = logging.getLogger(__name__)

Document = Union[bytes, str, IO[bytes]]

_XREF_KEYS = ("attack-id", "attack_id")
_ADDENDA_KEYS = ("addendums", "addenda", "addendum")
_TEXT_KEYS = ("text", "value", "description")


@dataclass(frozen=True)
class FightReport:
    """Counts from the FiGHT merge: entries seen, dropped, and applied."""

    total: int
    excluded: int
    enriched: int


def _addenda_of(entry: dict) -> List[str]:
    for key in _ADDENDA_KEYS:
        if key in entry and entry[key]:
            items = entry[key]
            if not isinstance(items, list):
                items = [items]
            paragraphs = []
            for item in items:
                if isinstance(item, str):
                    text = item
                else:
                    text = next(
                        (item[k] for k in _TEXT_KEYS if isinstance(item, dict) and item.get(k)),
                        None,
                    )
                if text:
                    paragraphs.append(str(text).strip())
            return [p for p in paragraphs if p]
    return []


def _cross_reference(entry: dict) -> str | None:
    for key in _XREF_KEYS:
        if entry.get(key):
            return str(entry[key])
    return None


def prepare_fight(
    fight_yaml: Document, attack: AttackSnapshot
) -> tuple[AttackSnapshot, FightReport]:
    """Merge FiGHT addenda into a copy of the ATT&CK snapshot.

    FiGHT entries lacking both an ATT&CK cross-reference and addenda are
    excluded, as are entries whose cross-reference does not resolve. The
    ATT&CK technique set itself is never reduced or extended.
    """
    if hasattr(fight_yaml, "read"):
        fight_yaml = fight_yaml.read()
    if isinstance(fight_yaml, bytes):
        fight_yaml = fight_yaml.decode("utf-8")
    try:
        data = yaml.safe_load(fight_yaml)
    except yaml.YAMLError as exc:
        raise CorpusParseError(f"FiGHT YAML failed to parse: {exc}") from exc

    if not isinstance(data, dict) or not data.get("techniques"):
        raise EmptyCorpusError("FiGHT document lists no techniques")

    techniques = dict(attack.techniques)
    total = excluded = enriched = 0
    for entry in data["techniques"]:
        if not isinstance(entry, dict):
            continue
        total += 1
        xref = _cross_reference(entry)
        addenda = _addenda_of(entry)
        if xref is None and not addenda:
            excluded += 1
            continue
        if xref is None:
            # Addenda without a resolvable technique have nowhere to attach.
            logger.warning(
                "FiGHT technique %s carries addenda but no ATT&CK cross-reference",
                entry.get("id", "<no id>"),
            )
            continue
        if xref not in techniques:
            logger.warning(
                "FiGHT technique %s references unknown ATT&CK id %s, excluded",
                entry.get("id", "<no id>"),
                xref,
            )
            excluded += 1
            continue
        if addenda:
            current = techniques[xref]
            techniques[xref] = replace(current, addenda=list(current.addenda) + addenda)
            enriched += 1

    report = FightReport(total=total, excluded=excluded, enriched=enriched)
    logger.info(
        "FiGHT merge: %d techniques, %d excluded, %d enriched",
        report.total,
        report.excluded,
        report.enriched,
    )
    snapshot = AttackSnapshot(
        techniques=techniques,
        tactics=dict(attack.tactics),
        domain=attack.domain,
        snapshot_date=attack.snapshot_date,
    )
    return snapshot, report
