"""FastAPI application exposing /info, /embed and /tactics."""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

import embedsvc
from embedsvc.backends import EmbeddingBackend
from embedsvc.classifiers import TacticClassifier

logger = logging.getLogger(__name__)

DEFAULT_BATCH_CAP = 64


class ServiceInfo(BaseModel):
    model: str
    dimension: int
    max_input_length: int
    batch_cap: int
    classifiers: List[str]
    version: str


class EmbedRequest(BaseModel):
    texts: List[str] = Field(min_length=1)


class EmbedResponse(BaseModel):
    model: str
    dimension: int
    embeddings: List[List[float]]
    truncated: List[bool]


class TacticsRequest(BaseModel):
    summary: str


class ClassifierResult(BaseModel):
    classifier: str
    tactics: List[str]


class TacticsResponse(BaseModel):
    results: List[ClassifierResult]


def create_app(
    backend: EmbeddingBackend,
    classifiers: Optional[Sequence[TacticClassifier]] = None,
    batch_cap: int = DEFAULT_BATCH_CAP,
) -> FastAPI:
    classifiers = list(classifiers or [])
    info = backend.info()

    app = FastAPI(
        title="embedding service",
        description="Sentence embeddings and tactic classification over HTTP.",
        version=embedsvc.__version__,
    )

    @app.get("/info", response_model=ServiceInfo)
    def service_info():
        return ServiceInfo(
            model=info.model,
            dimension=info.dimension,
            max_input_length=info.max_input_length,
            batch_cap=batch_cap,
            classifiers=[c.tag for c in classifiers],
            version=embedsvc.__version__,
        )

    @app.post("/embed", response_model=EmbedResponse)
    def embed(request: EmbedRequest):
        if len(request.texts) > batch_cap:
            raise HTTPException(
                status_code=400,
                detail=f"batch of {len(request.texts)} exceeds advertised cap {batch_cap}",
            )
        for index, text in enumerate(request.texts):
            if not text.strip():
                raise HTTPException(
                    status_code=400, detail=f"text at index {index} is empty"
                )
        try:
            vectors, truncated = backend.encode(request.texts)
        except Exception as exc:
            logger.exception("embedding backend failed")
            raise HTTPException(status_code=503, detail=f"model unavailable: {exc}")
        return EmbedResponse(
            model=info.model,
            dimension=info.dimension,
            embeddings=vectors,
            truncated=truncated,
        )

    @app.post("/tactics", response_model=TacticsResponse)
    def tactics(request: TacticsRequest):
        if not classifiers:
            raise HTTPException(status_code=503, detail="no tactic classifiers loaded")
        if not request.summary.strip():
            raise HTTPException(status_code=400, detail="summary is empty")
        return TacticsResponse(
            results=[
                ClassifierResult(
                    classifier=classifier.tag,
                    tactics=sorted(classifier.classify(request.summary)),
                )
                for classifier in classifiers
            ]
        )

    return app
