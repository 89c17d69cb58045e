"""ATT&CK Enterprise STIX 2.x bundle ingestion."""

from __future__ import annotations

import logging
from typing import Dict

from orca.corpus.capec import Document, _external_id, _external_ids, _latest_modified, _read_bundle
from orca.corpus.types import AttackSnapshot, TacticEntry, TechniqueEntry
from orca.errors import CorpusParseError, EmptyCorpusError

logger = logging.getLogger(__name__)


def load_attack(document: Document) -> AttackSnapshot:
    """Parse an ATT&CK STIX bundle into technique and tactic snapshots.

    Techniques carry the tactic ids resolved from their kill-chain phases
    and any CAPEC external references; addenda lists start empty. Revoked
    or deprecated techniques are skipped.
    """
    bundle = _read_bundle(document, "ATT&CK")
    objects = bundle.get("objects", [])

    tactics: Dict[str, TacticEntry] = {}
    shortname_to_id: Dict[str, str] = {}
    for obj in objects:
        if obj.get("type") != "x-mitre-tactic":
            continue
        tactic_id = _external_id(obj, "mitre-attack")
        if tactic_id is None:
            raise CorpusParseError(
                f"x-mitre-tactic {obj.get('id', '<no id>')} has no ATT&CK external id",
                object_id=obj.get("id"),
            )
        tactics[tactic_id] = TacticEntry(
            tactic_id=tactic_id,
            name=obj.get("name", ""),
            description=obj.get("description", ""),
        )
        shortname = obj.get("x_mitre_shortname")
        if shortname:
            shortname_to_id[shortname] = tactic_id

    techniques: Dict[str, TechniqueEntry] = {}
    domain = "enterprise-attack"
    for obj in objects:
        if obj.get("type") != "attack-pattern":
            continue
        if obj.get("revoked") or obj.get("x_mitre_deprecated"):
            continue
        technique_id = _external_id(obj, "mitre-attack")
        if technique_id is None:
            raise CorpusParseError(
                f"attack-pattern {obj.get('id', '<no id>')} has no ATT&CK external id",
                object_id=obj.get("id"),
            )
        domains = obj.get("x_mitre_domains")
        if domains:
            domain = domains[0]

        tactic_ids = []
        for phase in obj.get("kill_chain_phases", []):
            resolved = shortname_to_id.get(phase.get("phase_name", ""))
            if resolved is None:
                logger.warning(
                    "technique %s references unknown tactic phase %r",
                    technique_id,
                    phase.get("phase_name"),
                )
            else:
                tactic_ids.append(resolved)
        if not tactic_ids:
            logger.warning("technique %s has no resolvable tactics, skipped", technique_id)
            continue

        techniques[technique_id] = TechniqueEntry(
            technique_id=technique_id,
            name=obj.get("name", ""),
            description=obj.get("description", ""),
            tactic_ids=tactic_ids,
            capec_ids=_external_ids(obj, "capec"),
            addenda=[],
        )

    if not techniques:
        raise EmptyCorpusError("ATT&CK bundle contains no usable attack-pattern objects")

    logger.info("loaded %d ATT&CK techniques across %d tactics", len(techniques), len(tactics))
    return AttackSnapshot(
        techniques=techniques,
        tactics=tactics,
        domain=domain,
        snapshot_date=_latest_modified(objects),
    )
