"""The two mapping branches: threat-to-technique and threat-to-CAPEC.

Both branches score the threat paragraph against candidate texts with
cosine similarity and admit results through the configured filter
criterion: HFC keeps only scores at or above the threshold, SFC
additionally falls back to the single best candidate when nothing
passes, so every threat with candidates receives at least one mapping.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List

from orca.corpus.types import AttackSnapshot, CapecSnapshot, id_sort_key
from orca.errors import MappingError
from orca.semsim import EmbeddingProvider, cosine, embed_text
from orca.tactics import TacticCandidateSet
from orca.threatmodel import ThreatDocument

logger = logging.getLogger(__name__)

HFC = "HFC"
SFC = "SFC"

BRANCH_TTM = "TTM"
BRANCH_TCM = "TCM"

ADMITTED_THRESHOLD = "threshold"
ADMITTED_SOFT_FALLBACK = "soft_fallback"

# Addenda are appended to the technique description with blank lines.
_X2_SEPARATOR = "\n\n"


@dataclass(frozen=True)
class MappingResult:
    """One admitted (threat, target) pair with its similarity."""

    threat_id: str
    domain_tag: str
    threat_title: str
    target_id: str
    similarity: float
    branch: str
    admitted_by: str


def technique_text(description: str, addenda: List[str]) -> str:
    """x2 for the technique branch: description plus all addenda."""
    return _X2_SEPARATOR.join([description, *addenda])


def _admit(
    scored: List[tuple],
    cos_thrs: float,
    filter_kind: str,
) -> List[tuple]:
    """Apply the filter criterion to (similarity, target_id) pairs."""
    passed = [item for item in scored if item[0] >= cos_thrs]
    if passed or filter_kind == HFC:
        return [(sim, target, ADMITTED_THRESHOLD) for sim, target in passed]
    best = min(scored, key=lambda item: (-item[0], id_sort_key(item[1])))
    return [(best[0], best[1], ADMITTED_SOFT_FALLBACK)]


def _run_branch(
    document: ThreatDocument,
    threat_title: str,
    candidates: List[tuple],
    domain_tag: str,
    branch: str,
    cos_thrs: float,
    filter_kind: str,
    provider: EmbeddingProvider,
) -> List[MappingResult]:
    if filter_kind not in (HFC, SFC):
        raise MappingError(f"unknown filter criterion {filter_kind!r}")
    if not candidates:
        if filter_kind == SFC:
            raise MappingError(
                f"no candidates for threat {document.threat_id} in branch {branch}"
            )
        return []

    if document.embedding is None:
        document.embedding = embed_text(provider, document.summary)

    scored = []
    for target_id, text in candidates:
        similarity = cosine(document.embedding, embed_text(provider, text))
        scored.append((similarity, target_id))

    admitted = _admit(scored, cos_thrs, filter_kind)
    admitted.sort(key=lambda item: (-item[0], id_sort_key(item[1])))
    return [
        MappingResult(
            threat_id=document.threat_id,
            domain_tag=domain_tag,
            threat_title=threat_title,
            target_id=target_id,
            similarity=similarity,
            branch=branch,
            admitted_by=admitted_by,
        )
        for similarity, target_id, admitted_by in admitted
    ]


def map_ttm(
    document: ThreatDocument,
    candidates: TacticCandidateSet,
    techniques: AttackSnapshot,
    cos_thrs: float,
    filter_kind: str,
    provider: EmbeddingProvider,
    threat_title: str = "",
    preselect: str = "psi",
) -> List[MappingResult]:
    """Map one threat to the techniques of its preselected tactics.

    With preselect="psi" the candidate pool spans every tactic in the
    merged set; "xi" restricts it to the single best tactic. The x2 text
    is the technique description concatenated with its addenda.
    """
    if not candidates.merged:
        raise MappingError(f"no preselected tactics for threat {document.threat_id}")
    if preselect == "xi":
        if candidates.best is None:
            raise MappingError(
                f"preselect=xi requested but no best tactic for {document.threat_id}"
            )
        tactic_pool = {candidates.best}
    else:
        tactic_pool = set(candidates.merged)

    pool = [
        (entry.technique_id, technique_text(entry.description, entry.addenda))
        for entry in techniques.sorted_techniques()
        if tactic_pool.intersection(entry.tactic_ids)
    ]
    return _run_branch(
        document,
        threat_title,
        pool,
        techniques.domain,
        BRANCH_TTM,
        cos_thrs,
        filter_kind,
        provider,
    )


def map_tcm(
    document: ThreatDocument,
    patterns: CapecSnapshot,
    cos_thrs: float,
    filter_kind: str,
    provider: EmbeddingProvider,
    threat_title: str = "",
) -> List[MappingResult]:
    """Map one threat directly to CAPEC attack patterns.

    The x2 text is the pattern description alone; deprecated patterns
    never enter the candidate pool.
    """
    if not len(patterns):
        raise MappingError("CAPEC snapshot is empty")
    pool = [(pattern.capec_id, pattern.description) for pattern in patterns.active()]
    return _run_branch(
        document,
        threat_title,
        pool,
        patterns.domain,
        BRANCH_TCM,
        cos_thrs,
        filter_kind,
        provider,
    )
