"""Text embeddings and cosine similarity behind a provider abstraction.

Two providers are shipped: a deterministic hashed bag-of-words baseline
that needs no external state, and an HTTP client for a sentence-embedding
service. Every similarity in the pipeline is the cosine between an x1
(threat paragraph) and an x2 (technique or attack-pattern text).
"""

from __future__ import annotations

import hashlib
import logging
import math
import re
from dataclasses import dataclass
from typing import Dict, List, Protocol, Sequence

import numpy as np
import requests

from orca.errors import EmbeddingError, EmbeddingTransportError

logger = logging.getLogger(__name__)

BASELINE_DIMENSION = 256  # power of two, keeps bucket hashing reproducible

_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class Embedding:
    """A dense vector tagged with the provider+model that produced it."""

    vector: np.ndarray
    dimension: int
    provider_tag: str

    def __post_init__(self):
        if len(self.vector) != self.dimension:
            raise EmbeddingError(
                f"vector length {len(self.vector)} != declared dimension {self.dimension}"
            )


def cosine(a: Embedding, b: Embedding) -> float:
    """Cosine similarity in [-1, 1], clamped against rounding overshoot."""
    if a.dimension != b.dimension:
        raise EmbeddingError(
            f"dimension mismatch: {a.dimension} vs {b.dimension}"
        )
    norm_a = float(np.linalg.norm(a.vector))
    norm_b = float(np.linalg.norm(b.vector))
    if norm_a == 0.0 or norm_b == 0.0:
        raise EmbeddingError("cosine undefined for a zero-norm vector")
    value = float(np.dot(a.vector, b.vector)) / (norm_a * norm_b)
    return max(-1.0, min(1.0, value))


class EmbeddingProvider(Protocol):
    """Anything that can turn texts into embeddings."""

    tag: str

    def embed_texts(self, texts: Sequence[str]) -> List[Embedding]: ...


def _bucket(token: str, dimension: int) -> int:
    digest = hashlib.md5(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % dimension


def tokenize(text: str) -> List[str]:
    """Lowercase tokens split on non-alphanumeric characters."""
    return _TOKEN.findall(text.lower())


def baseline_embed(text: str, dimension: int = BASELINE_DIMENSION) -> Embedding:
    """Deterministic hashed bag-of-words embedding.

    Token counts are hashed into a fixed number of buckets with
    logarithmic term weighting (1 + ln(count)); identical text yields a
    bit-identical vector in every process.
    """
    if not text or not text.strip():
        raise EmbeddingError("cannot embed empty text")
    tokens = tokenize(text)
    if not tokens:
        raise EmbeddingError(f"text {text!r} has no alphanumeric tokens")
    counts: Dict[str, int] = {}
    for token in tokens:
        counts[token] = counts.get(token, 0) + 1
    vector = np.zeros(dimension, dtype=np.float64)
    for token, count in counts.items():
        vector[_bucket(token, dimension)] += 1.0 + math.log(count)
    return Embedding(
        vector=vector,
        dimension=dimension,
        provider_tag=f"baseline-hash-{dimension}",
    )


class BaselineProvider:
    """Offline provider wrapping baseline_embed."""

    def __init__(self, dimension: int = BASELINE_DIMENSION):
        self.dimension = dimension
        self.tag = f"baseline-hash-{dimension}"

    def embed_texts(self, texts: Sequence[str]) -> List[Embedding]:
        return [baseline_embed(text, self.dimension) for text in texts]


class RemoteProvider:
    """Client for the external embedding service.

    Contract: POST {endpoint}/embed with {"texts": [...]} returns
    {"model": str, "dimension": int, "embeddings": [[...]]} in request
    order, with an optional parallel "truncated" flag list.
    """

    def __init__(self, endpoint: str, batch_size: int = 32, timeout: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self.batch_size = max(1, batch_size)
        self.timeout = timeout
        self.tag = f"service:{self.endpoint}"
        self._negotiated = False

    def _negotiate_batch_cap(self) -> None:
        """Clamp the batch size to the cap advertised by /info, if any."""
        self._negotiated = True
        try:
            response = requests.get(f"{self.endpoint}/info", timeout=self.timeout)
            response.raise_for_status()
            cap = response.json().get("batch_cap")
        except (requests.RequestException, ValueError):
            return
        if isinstance(cap, int) and cap >= 1:
            self.batch_size = min(self.batch_size, cap)

    def embed_texts(self, texts: Sequence[str]) -> List[Embedding]:
        for index, text in enumerate(texts):
            if not text or not text.strip():
                raise EmbeddingError(f"cannot embed empty text (batch index {index})")
        if not self._negotiated:
            self._negotiate_batch_cap()
        embeddings: List[Embedding] = []
        for start in range(0, len(texts), self.batch_size):
            batch = list(texts[start : start + self.batch_size])
            embeddings.extend(self._embed_batch(batch, start))
        return embeddings

    def _embed_batch(self, batch: List[str], offset: int) -> List[Embedding]:
        try:
            response = requests.post(
                f"{self.endpoint}/embed", json={"texts": batch}, timeout=self.timeout
            )
            response.raise_for_status()
        except requests.RequestException as exc:
            raise EmbeddingTransportError(
                f"embedding service at {self.endpoint} unreachable: {exc}",
                text_id=f"batch[{offset}:{offset + len(batch)}]",
            ) from exc
        payload = response.json()
        model = payload.get("model", "unknown")
        dimension = int(payload["dimension"])
        vectors = payload["embeddings"]
        if len(vectors) != len(batch):
            raise EmbeddingTransportError(
                f"service returned {len(vectors)} embeddings for {len(batch)} texts",
                text_id=f"batch[{offset}:{offset + len(batch)}]",
            )
        for position, truncated in enumerate(payload.get("truncated", [])):
            if truncated:
                logger.warning(
                    "embedding service truncated text at batch index %d", offset + position
                )
        self.tag = f"service:{model}"
        return [
            Embedding(
                vector=np.asarray(vector, dtype=np.float64),
                dimension=dimension,
                provider_tag=self.tag,
            )
            for vector in vectors
        ]


class CachingProvider:
    """Per-run memo so repeated corpus texts are embedded once."""

    def __init__(self, inner: EmbeddingProvider):
        self.inner = inner
        self._memo: Dict[str, Embedding] = {}

    @property
    def tag(self) -> str:
        return self.inner.tag

    def embed_texts(self, texts: Sequence[str]) -> List[Embedding]:
        missing = [t for t in dict.fromkeys(texts) if t not in self._memo]
        if missing:
            for text, embedding in zip(missing, self.inner.embed_texts(missing)):
                self._memo[text] = embedding
        return [self._memo[text] for text in texts]


def embed_text(provider: EmbeddingProvider, text: str) -> Embedding:
    """Embed a single text through any provider."""
    return provider.embed_texts([text])[0]
