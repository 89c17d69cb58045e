"""Fixtures: contract client over the offline backend, optional real model."""

from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from embedsvc.app import create_app
from embedsvc.backends import HashedBackend
from embedsvc.classifiers import StaticClassifier

_MODEL_CACHE = {"checked": False, "backend": None, "error": None}


def real_model_backend():
    """The pinned transformer backend, or None when it cannot load."""
    if not _MODEL_CACHE["checked"]:
        _MODEL_CACHE["checked"] = True
        try:
            from embedsvc.backends import SentenceTransformerBackend

            _MODEL_CACHE["backend"] = SentenceTransformerBackend()
        except Exception as exc:
            _MODEL_CACHE["error"] = str(exc)
    return _MODEL_CACHE["backend"]


def model_skip_reason() -> str:
    return f"pinned model not loadable here: {_MODEL_CACHE['error']}"


@pytest.fixture(scope="session")
def hash_client() -> TestClient:
    app = create_app(HashedBackend(), classifiers=[], batch_cap=16)
    with TestClient(app) as client:
        yield client


@pytest.fixture(scope="session")
def classifier_client() -> TestClient:
    app = create_app(
        HashedBackend(),
        classifiers=[
            StaticClassifier("stub-alpha", {"TA0001"}),
            StaticClassifier("stub-beta", {"TA0006"}),
        ],
    )
    with TestClient(app) as client:
        yield client
