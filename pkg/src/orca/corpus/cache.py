"""Versioned on-disk cache for corpus snapshots.

One file per corpus, named ``<corpus_type>-<content_hash>.json``; a cache
version field guards against schema drift between releases.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Callable, Iterable, Optional, TypeVar, Union

from orca.errors import StaleCacheError

logger = logging.getLogger(__name__)

CACHE_VERSION = 1

T = TypeVar("T")


def content_hash(data: Union[bytes, Iterable[bytes]]) -> str:
    """Hex SHA-256 over one byte string or a sequence of them."""
    digest = hashlib.sha256()
    if isinstance(data, bytes):
        digest.update(data)
    else:
        for chunk in data:
            digest.update(hashlib.sha256(chunk).digest())
    return digest.hexdigest()


def _cache_path(cache_dir: Path, corpus_type: str, digest: str) -> Path:
    return Path(cache_dir) / f"{corpus_type}-{digest[:16]}.json"


def store_cached(cache_dir: Path, corpus_type: str, digest: str, payload: dict) -> Path:
    """Write a snapshot payload under the corpus type + content hash."""
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = _cache_path(cache_dir, corpus_type, digest)
    document = {
        "cache_version": CACHE_VERSION,
        "corpus_type": corpus_type,
        "content_hash": digest,
        "payload": payload,
    }
    tmp = path.with_suffix(".tmp")
    tmp.write_text(
        json.dumps(document, sort_keys=True, ensure_ascii=False, separators=(",", ":")),
        encoding="utf-8",
    )
    os.replace(tmp, path)
    return path


def load_cached(
    cache_dir: Path,
    corpus_type: str,
    digest: str,
    from_dict: Callable[[dict], T],
) -> Optional[T]:
    """Load a cached snapshot, or None when no cache entry exists.

    Raises StaleCacheError when the entry was written by a different
    cache schema version; callers should re-ingest the source document.
    """
    path = _cache_path(Path(cache_dir), corpus_type, digest)
    if not path.exists():
        return None
    document = json.loads(path.read_text(encoding="utf-8"))
    if document.get("cache_version") != CACHE_VERSION:
        raise StaleCacheError(
            f"cache entry {path.name} has version {document.get('cache_version')}, "
            f"expected {CACHE_VERSION}; re-ingest the corpus"
        )
    logger.debug("cache hit for %s (%s)", corpus_type, digest[:16])
    return from_dict(document["payload"])
