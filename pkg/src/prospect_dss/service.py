"""The deployment surface: two REST endpoints for prediction and decision,
plus document retrieval, feedback capture and training export.

A central controller mediates between the store, the evidence backend and
the decider; each is injected and independently replaceable. Endpoints hold
no state of their own.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse

from . import __version__
from .decider import (
    REVIEW,
    Criterion,
    CriterionDecision,
    DeciderConfig,
    Verdict,
    compose_verdict,
    decide_document,
    default_config,
)
from .detection import BackendUnavailable, BaselineBackend, EvidenceBackend
from .documents import Document, validate_document
from .schemas import (
    AnnotationIn,
    DocumentIn,
    FeedbackAck,
    FeedbackIn,
    HealthResponse,
    PredictResponse,
    VerdictOut,
)
from .store import DocumentStore, UnknownDocument


class InvalidDocument(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


@dataclass
class PredictOutcome:
    document: Document
    verdict: Verdict
    warnings: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)


def _all_review_verdict(reason: str) -> Verdict:
    decisions = tuple(
        CriterionDecision(
            criterion=criterion, outcome=REVIEW, chosen_value=None, confidence=0.0,
            alternatives=(), explanation=reason, supporting_fragments=(),
        )
        for criterion in Criterion
    )
    return compose_verdict(decisions)


class Controller:
    """Mediates store, evidence detection and decider."""

    def __init__(
        self,
        store: DocumentStore,
        backend: EvidenceBackend,
        config: Optional[DeciderConfig] = None,
    ):
        self.store = store
        self.backend = backend
        self.config = config if config is not None else default_config()
        self.model_version = f"{backend.name}/{__version__}"
        canonical = json.dumps(self.config.raw, sort_keys=True, ensure_ascii=False)
        self.config_version = hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def _validate(self, doc: Document) -> None:
        violations = validate_document(doc)
        if violations:
            raise InvalidDocument(violations)

    def predict(self, doc: Document) -> PredictOutcome:
        """Detect evidence, decide, store document with its predictions.

        Submitted annotations are ignored: this endpoint serves raw documents.
        """
        self._validate(doc)
        bare = doc.with_annotations(())
        t0 = time.perf_counter()
        try:
            annotations = self.backend.detect(bare)
        except BackendUnavailable as exc:
            self.store.put_document(bare)
            return PredictOutcome(
                document=bare,
                verdict=_all_review_verdict(
                    "evidence backend unavailable; all criteria need manual review"
                ),
                warnings=[f"evidence backend unavailable: {exc}"],
                timings={"detect_ms": (time.perf_counter() - t0) * 1000.0},
            )
        t1 = time.perf_counter()
        enriched = doc.with_annotations(annotations)
        self.store.put_document(enriched)
        verdict = decide_document(enriched, self.config)
        t2 = time.perf_counter()
        return PredictOutcome(
            document=enriched,
            verdict=verdict,
            timings={
                "detect_ms": (t1 - t0) * 1000.0,
                "decide_ms": (t2 - t1) * 1000.0,
            },
        )

    def decide(self, doc: Document) -> PredictOutcome:
        """Decision part only, over the submitted annotations. Pure."""
        self._validate(doc)
        t0 = time.perf_counter()
        verdict = decide_document(doc, self.config)
        return PredictOutcome(
            document=doc,
            verdict=verdict,
            timings={"decide_ms": (time.perf_counter() - t0) * 1000.0},
        )

    def submit_feedback(self, doc_id: str, feedback: FeedbackIn) -> int:
        timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat()
        record = feedback.to_core(doc_id, timestamp)
        self.store.append_feedback(record)
        return len(self.store.feedback_log(doc_id))


def _response(outcome: PredictOutcome, controller: Controller) -> PredictResponse:
    return PredictResponse(
        document_id=outcome.document.id,
        verdict=VerdictOut.from_core(outcome.verdict),
        annotations=[AnnotationIn.from_core(a) for a in outcome.document.annotations],
        model_version=controller.model_version,
        config_version=controller.config_version,
        warnings=outcome.warnings,
        timings=outcome.timings,
    )


def create_app(controller: Optional[Controller] = None) -> FastAPI:
    if controller is None:
        controller = Controller(store=DocumentStore(), backend=BaselineBackend())

    app = FastAPI(title="prospect-dss", version=__version__)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.controller = controller

    @app.post("/v1/predict", response_model=PredictResponse)
    def predict(document: DocumentIn) -> PredictResponse:
        try:
            outcome = controller.predict(document.to_core())
        except InvalidDocument as exc:
            raise HTTPException(status_code=422, detail={"violations": exc.violations})
        return _response(outcome, controller)

    @app.post("/v1/decide", response_model=PredictResponse)
    def decide(document: DocumentIn) -> PredictResponse:
        try:
            outcome = controller.decide(document.to_core())
        except InvalidDocument as exc:
            raise HTTPException(status_code=422, detail={"violations": exc.violations})
        return _response(outcome, controller)

    @app.post("/v1/documents/{doc_id}/feedback", response_model=FeedbackAck)
    def submit_feedback(doc_id: str, feedback: FeedbackIn) -> FeedbackAck:
        try:
            count = controller.submit_feedback(doc_id, feedback)
        except UnknownDocument:
            raise HTTPException(status_code=404, detail=f"unknown document {doc_id!r}")
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return FeedbackAck(status="ok", document_id=doc_id, feedback_count=count)

    @app.get("/v1/documents/{doc_id}", response_model=DocumentIn)
    def get_document(doc_id: str) -> DocumentIn:
        try:
            doc = controller.store.get_document(doc_id)
        except UnknownDocument:
            raise HTTPException(status_code=404, detail=f"unknown document {doc_id!r}")
        return DocumentIn.from_core(doc)

    @app.get("/v1/export/training")
    def export_training() -> PlainTextResponse:
        lines = "\n".join(controller.store.export_training_data())
        body = lines + "\n" if lines else ""
        return PlainTextResponse(content=body, media_type="application/x-ndjson")

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(
            status="ok",
            model_version=controller.model_version,
            config_version=controller.config_version,
            backend=controller.backend.name,
        )

    return app
