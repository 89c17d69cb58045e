"""Tactic classifiers servable behind the /tactics endpoint.

Trained model hosting is optional; the deterministic keyword classifier
keeps the endpoint contract exercisable offline, and static classifiers
back the protocol tests.
"""

from __future__ import annotations

from typing import Dict, List, Protocol, Set


class TacticClassifier(Protocol):
    tag: str

    def classify(self, summary: str) -> Set[str]: ...


class StaticClassifier:
    """Always returns the same tactic set; protocol/stub testing."""

    def __init__(self, tag: str, tactics):
        self.tag = tag
        self._tactics = set(tactics)

    def classify(self, summary: str) -> Set[str]:
        return set(self._tactics)


class KeywordClassifier:
    """Maps summary keywords onto enterprise tactic ids."""

    tag = "keyword-v1"

    RULES: Dict[str, str] = {
        "credential": "TA0006",
        "password": "TA0006",
        "account": "TA0006",
        "privilege": "TA0004",
        "escalat": "TA0004",
        "exfiltrat": "TA0010",
        "lateral": "TA0008",
        "persist": "TA0003",
        "discover": "TA0007",
        "scan": "TA0043",
        "phish": "TA0001",
        "exposed": "TA0001",
        "initial": "TA0001",
        "execut": "TA0002",
        "command": "TA0011",
        "denial": "TA0040",
        "destro": "TA0040",
    }

    def classify(self, summary: str) -> Set[str]:
        lowered = summary.lower()
        return {tactic for keyword, tactic in self.RULES.items() if keyword in lowered}


def build_classifiers(names: List[str]) -> List[TacticClassifier]:
    classifiers: List[TacticClassifier] = []
    for name in names:
        if name == "keyword":
            classifiers.append(KeywordClassifier())
        else:
            raise ValueError(f"unknown classifier {name!r}")
    return classifiers
