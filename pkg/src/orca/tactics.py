"""Tactic preselection: merge classifier result sets per threat.

Each classifier contributes one or more result sets of tactic ids; the
deduplicated union is the preselection the technique-mapping branch
iterates, while the single best tactic by description similarity is
recorded alongside for reporting.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Protocol, Sequence, Set

import requests

from orca.corpus.types import AttackSnapshot, id_sort_key
from orca.errors import ClassifierError, EmbeddingTransportError
from orca.semsim import CachingProvider, EmbeddingProvider, cosine, embed_text
from orca.threatmodel import ThreatDocument

logger = logging.getLogger(__name__)


@dataclass
class TacticCandidateSet:
    """Per-threat classifier outputs, their union, and the best match."""

    threat_id: str
    per_classifier: Dict[str, Set[str]] = field(default_factory=dict)
    merged: Set[str] = field(default_factory=set)
    similarities: Dict[str, float] = field(default_factory=dict)
    best: Optional[str] = None


class TacticClassifier(Protocol):
    """A classifier handle; may host several named result sets."""

    tag: str

    def classify(self, document: ThreatDocument) -> Dict[str, Set[str]]: ...


def baseline_classifier(
    document: ThreatDocument,
    tactics: AttackSnapshot,
    top_k: int,
    provider: EmbeddingProvider,
) -> Set[str]:
    """Top-k tactic ids by description similarity to the threat summary.

    Ties are broken by tactic id order, so the result is deterministic
    for a fixed provider.
    """
    tactic_entries = tactics.sorted_tactics()
    if top_k > len(tactic_entries):
        raise ValueError(f"top_k {top_k} exceeds tactic count {len(tactic_entries)}")
    if document.embedding is None:
        document.embedding = embed_text(provider, document.summary)
    ranked = sorted(
        tactic_entries,
        key=lambda t: (
            -cosine(document.embedding, embed_text(provider, t.description)),
            id_sort_key(t.tactic_id),
        ),
    )
    return {entry.tactic_id for entry in ranked[:top_k]}


class BaselineTacticClassifier:
    """Deterministic offline stand-in for trained tactic classifiers."""

    def __init__(self, tactics: AttackSnapshot, top_k: int, provider: EmbeddingProvider):
        self.tactics = tactics
        self.top_k = top_k
        self.provider = CachingProvider(provider) if not isinstance(provider, CachingProvider) else provider
        self.tag = f"baseline-top{top_k}"

    def classify(self, document: ThreatDocument) -> Dict[str, Set[str]]:
        return {
            self.tag: baseline_classifier(document, self.tactics, self.top_k, self.provider)
        }


class RemoteTacticClassifier:
    """Client for the classifier service endpoint.

    Contract: POST {endpoint}/tactics with {"summary": str} returns
    {"results": [{"classifier": str, "tactics": [str, ...]}, ...]}; a
    service without loaded classifiers answers 503.
    """

    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.tag = f"service:{self.endpoint}"

    def classify(self, document: ThreatDocument) -> Dict[str, Set[str]]:
        try:
            response = requests.post(
                f"{self.endpoint}/tactics",
                json={"summary": document.summary},
                timeout=self.timeout,
            )
            response.raise_for_status()
        except requests.RequestException as exc:
            raise EmbeddingTransportError(
                f"classifier service at {self.endpoint} unavailable: {exc}",
                text_id=document.threat_id,
            ) from exc
        payload = response.json()
        results = payload.get("results", [])
        return {
            entry["classifier"]: set(entry.get("tactics", []))
            for entry in results
        }


def classify_tactics(
    document: ThreatDocument,
    classifiers: Sequence[TacticClassifier],
    tactics: AttackSnapshot,
    provider: EmbeddingProvider,
) -> TacticCandidateSet:
    """Run every classifier and merge their result sets for one threat.

    A failing classifier is logged and omitted; when all of them fail the
    threat cannot be preselected and an error is raised. The best tactic
    is the similarity argmax over the merged set, ties resolved towards
    the lexicographically smallest tactic id.
    """
    if not classifiers:
        raise ClassifierError("at least one tactic classifier is required")
    if not document.summary.strip():
        raise ClassifierError(f"threat {document.threat_id} has an empty summary")

    per_classifier: Dict[str, Set[str]] = {}
    failures = 0
    for classifier in classifiers:
        try:
            for tag, result in classifier.classify(document).items():
                per_classifier[tag] = set(result)
        except Exception as exc:
            failures += 1
            logger.warning(
                "classifier %s failed for %s: %s",
                getattr(classifier, "tag", "<unknown>"),
                document.threat_id,
                exc,
            )
    if not per_classifier and failures:
        raise ClassifierError(
            f"all {failures} tactic classifiers failed for {document.threat_id}"
        )

    merged: Set[str] = set()
    for result in per_classifier.values():
        merged |= result

    if document.embedding is None:
        document.embedding = embed_text(provider, document.summary)

    similarities: Dict[str, float] = {}
    for tactic_id in sorted(merged, key=id_sort_key):
        if tactic_id not in tactics.tactics:
            logger.warning(
                "classifier proposed unknown tactic %s for %s", tactic_id, document.threat_id
            )
            continue
        description = tactics.tactic(tactic_id).description
        similarities[tactic_id] = cosine(
            document.embedding, embed_text(provider, description)
        )

    best = None
    if similarities:
        best = min(
            similarities,
            key=lambda tid: (-similarities[tid], tid),
        )
    return TacticCandidateSet(
        threat_id=document.threat_id,
        per_classifier=per_classifier,
        merged=merged,
        similarities=similarities,
        best=best,
    )
