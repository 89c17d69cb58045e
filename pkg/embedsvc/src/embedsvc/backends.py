"""Embedding backends: the pinned transformer model and an offline stub."""

from __future__ import annotations

import hashlib
import logging
import math
import re
from dataclasses import dataclass
from typing import List, Protocol, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

PINNED_MODEL = "sentence-transformers/all-MiniLM-L12-v2"

_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class BackendInfo:
    model: str
    dimension: int
    max_input_length: int


class EmbeddingBackend(Protocol):
    """Turns a batch of texts into vectors plus per-item truncation flags."""

    def info(self) -> BackendInfo: ...

    def encode(self, texts: Sequence[str]) -> Tuple[List[List[float]], List[bool]]: ...


class HashedBackend:
    """Deterministic hashed bag-of-words stand-in for contract testing.

    Serves the same wire format as the transformer backend so clients can
    be exercised without model weights; 384 dimensions mirror the pinned
    model's output shape.
    """

    def __init__(self, dimension: int = 384, max_input_length: int = 8192):
        self.dimension = dimension
        self.max_input_length = max_input_length

    def info(self) -> BackendInfo:
        return BackendInfo(
            model=f"hashed-bow-{self.dimension}",
            dimension=self.dimension,
            max_input_length=self.max_input_length,
        )

    def _bucket(self, token: str) -> int:
        digest = hashlib.md5(token.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % self.dimension

    def encode(self, texts: Sequence[str]) -> Tuple[List[List[float]], List[bool]]:
        vectors = []
        truncated = []
        for text in texts:
            flag = len(text) > self.max_input_length
            truncated.append(flag)
            usable = text[: self.max_input_length]
            counts: dict = {}
            for token in _TOKEN.findall(usable.lower()):
                counts[token] = counts.get(token, 0) + 1
            vector = np.zeros(self.dimension, dtype=np.float64)
            for token, count in counts.items():
                vector[self._bucket(token)] += 1.0 + math.log(count)
            vectors.append(vector.tolist())
        return vectors, truncated


class SentenceTransformerBackend:
    """Wraps the pinned sentence-transformers model for inference."""

    def __init__(self, model_name: str = PINNED_MODEL):
        from sentence_transformers import SentenceTransformer

        self.model_name = model_name
        self.model = SentenceTransformer(model_name)
        self.dimension = int(self.model.get_sentence_embedding_dimension())
        self.max_seq_length = int(getattr(self.model, "max_seq_length", 256))

    def info(self) -> BackendInfo:
        return BackendInfo(
            model=self.model_name,
            dimension=self.dimension,
            max_input_length=self.max_seq_length,
        )

    def _is_truncated(self, text: str) -> bool:
        try:
            tokens = self.model.tokenizer(text, add_special_tokens=True)["input_ids"]
            return len(tokens) > self.max_seq_length
        except Exception:
            return False

    def encode(self, texts: Sequence[str]) -> Tuple[List[List[float]], List[bool]]:
        vectors = self.model.encode(
            list(texts), convert_to_numpy=True, show_progress_bar=False
        )
        truncated = [self._is_truncated(text) for text in texts]
        return [vector.tolist() for vector in vectors], truncated


def load_backend(kind: str, model_name: str = PINNED_MODEL) -> EmbeddingBackend:
    """Build a backend by kind: 'model' (transformer) or 'hash' (stub)."""
    if kind == "hash":
        return HashedBackend()
    if kind == "model":
        return SentenceTransformerBackend(model_name)
    raise ValueError(f"unknown backend kind {kind!r}")
