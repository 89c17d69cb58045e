"""Ingestion and indexing of the external security corpora.

Loaders parse CAPEC STIX, ATT&CK STIX, FiGHT YAML and NVD JSON feeds into
immutable snapshots that the mapping and extraction stages share. Snapshots
round-trip through a versioned on-disk cache keyed by content hash.
"""

from orca.corpus.types import (
    AttackPattern,
    AttackSnapshot,
    BaseScoreMetrics,
    CapecSnapshot,
    CweIndex,
    TacticEntry,
    TechniqueEntry,
    VulnerabilityRecord,
    VulnStore,
    id_sort_key,
)
from orca.corpus.capec import load_capec
from orca.corpus.attack import load_attack
from orca.corpus.fight import FightReport, prepare_fight
from orca.corpus.nvd import load_nvd
from orca.corpus.cache import content_hash, load_cached, store_cached

__all__ = [
    "AttackPattern",
    "AttackSnapshot",
    "BaseScoreMetrics",
    "CapecSnapshot",
    "CweIndex",
    "FightReport",
    "TacticEntry",
    "TechniqueEntry",
    "VulnerabilityRecord",
    "VulnStore",
    "content_hash",
    "id_sort_key",
    "load_attack",
    "load_capec",
    "load_cached",
    "load_nvd",
    "prepare_fight",
    "store_cached",
]
