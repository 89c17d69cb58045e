"""Shared fixtures: pinned corpora, synthetic builders, a stub service."""

from __future__ import annotations

import json
import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from orca.corpus import CweIndex, load_attack, load_capec, load_nvd
from orca.corpus.types import (
    AttackPattern,
    AttackSnapshot,
    BaseScoreMetrics,
    CapecSnapshot,
    TacticEntry,
    TechniqueEntry,
    VulnerabilityRecord,
    VulnStore,
)
from orca.semsim import BASELINE_DIMENSION, BaselineProvider, CachingProvider, baseline_embed

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def capec_snapshot() -> CapecSnapshot:
    return load_capec((DATA_DIR / "capec_small.json").read_bytes())


@pytest.fixture(scope="session")
def attack_snapshot() -> AttackSnapshot:
    return load_attack((DATA_DIR / "attack_small.json").read_bytes())


@pytest.fixture(scope="session")
def enterprise_snapshot() -> AttackSnapshot:
    return load_attack((DATA_DIR / "enterprise_2024.json").read_bytes())


@pytest.fixture(scope="session")
def nvd_store_index():
    return load_nvd([(DATA_DIR / "nvd_small.json").read_bytes()])


@pytest.fixture()
def provider() -> CachingProvider:
    return CachingProvider(BaselineProvider())


def make_pattern(
    capec_id: str,
    description: str = "",
    parent_of=(),
    can_precede=(),
    related_cwes=(),
    deprecated: bool = False,
    name: str = "",
) -> AttackPattern:
    return AttackPattern(
        capec_id=capec_id,
        name=name or f"Pattern {capec_id}",
        description=description or f"Synthetic description for {capec_id}.",
        parent_of=list(parent_of),
        can_precede=list(can_precede),
        related_cwes=list(related_cwes),
        deprecated=deprecated,
    )


def make_capec_snapshot(patterns, domain: str = "capec") -> CapecSnapshot:
    return CapecSnapshot(
        patterns={pattern.capec_id: pattern for pattern in patterns},
        domain=domain,
    )


def make_tactic(tactic_id: str, name: str = "", description: str = "") -> TacticEntry:
    return TacticEntry(
        tactic_id=tactic_id,
        name=name or f"Tactic {tactic_id}",
        description=description or f"Synthetic tactic description for {tactic_id}.",
    )


def make_technique(
    technique_id: str,
    tactic_ids,
    description: str = "",
    capec_ids=(),
    addenda=(),
    name: str = "",
) -> TechniqueEntry:
    return TechniqueEntry(
        technique_id=technique_id,
        name=name or f"Technique {technique_id}",
        description=description or f"Synthetic technique description for {technique_id}.",
        tactic_ids=list(tactic_ids),
        capec_ids=list(capec_ids),
        addenda=list(addenda),
    )


def make_attack_snapshot(techniques, tactics, domain: str = "enterprise-attack") -> AttackSnapshot:
    return AttackSnapshot(
        techniques={t.technique_id: t for t in techniques},
        tactics={t.tactic_id: t for t in tactics},
        domain=domain,
    )


def make_record(
    cve_id: str,
    cwe_ids,
    published: str,
    v2=None,
    v3=None,
    v4=None,
) -> VulnerabilityRecord:
    def bsm(triple):
        if triple is None:
            return None
        impact, exploitability, base = triple
        return BaseScoreMetrics(impact=impact, exploitability=exploitability, base=base)

    return VulnerabilityRecord(
        cve_id=cve_id,
        cwe_ids=list(cwe_ids),
        published=datetime.fromisoformat(published).replace(tzinfo=timezone.utc),
        cvss_v2=bsm(v2),
        cvss_v3=bsm(v3),
        cvss_v4=bsm(v4),
    )


def make_store(records) -> tuple[VulnStore, CweIndex]:
    store = VulnStore(records={r.cve_id: r for r in records})
    return store, CweIndex.from_store(store)


class _StubServiceHandler(BaseHTTPRequestHandler):
    """Implements the embedding + classifier HTTP contracts over the baseline."""

    max_text_length = 10000

    def log_message(self, *args):
        pass

    def _send_json(self, payload, status=200):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/info":
            self._send_json(
                {
                    "model": "stub-baseline",
                    "dimension": BASELINE_DIMENSION,
                    "max_input_length": self.max_text_length,
                    "batch_cap": 64,
                    "classifiers": ["stub-alpha", "stub-beta"],
                }
            )
        else:
            self._send_json({"error": "not found"}, status=404)

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length).decode("utf-8"))
        if self.path == "/embed":
            texts = payload.get("texts", [])
            if not texts or any(not t.strip() for t in texts):
                self._send_json({"error": "texts must be non-empty"}, status=400)
                return
            truncated = [len(t) > self.max_text_length for t in texts]
            embeddings = [
                baseline_embed(t[: self.max_text_length]).vector.tolist() for t in texts
            ]
            self._send_json(
                {
                    "model": "stub-baseline",
                    "dimension": BASELINE_DIMENSION,
                    "embeddings": embeddings,
                    "truncated": truncated,
                }
            )
        elif self.path == "/tactics":
            summary = payload.get("summary", "")
            if not summary.strip():
                self._send_json({"error": "summary required"}, status=400)
                return
            lowered = summary.lower()
            alpha = {"TA0006"} if "credential" in lowered or "account" in lowered else {"TA0001"}
            beta = {"TA0004"} if "privilege" in lowered else {"TA0001"}
            self._send_json(
                {
                    "results": [
                        {"classifier": "stub-alpha", "tactics": sorted(alpha)},
                        {"classifier": "stub-beta", "tactics": sorted(beta)},
                    ]
                }
            )
        else:
            self._send_json({"error": "not found"}, status=404)


@pytest.fixture()
def stub_service():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubServiceHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        thread.join(timeout=5)
