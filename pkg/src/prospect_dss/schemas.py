"""Pydantic request/response models for the HTTP boundary.

These mirror the document wire record one-to-one and convert to and from the
core dataclasses. All offsets are Unicode code point offsets into the
document text.
"""

from __future__ import annotations

import datetime as _dt
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from . import decider as _decider
from . import documents as _docs
from . import store as _store


class TokenSpan(BaseModel):
    start: int
    end: int


class AnnotationIn(BaseModel):
    type: str
    fragments: list[tuple[int, int]]
    source: Literal["human", "model", "baseline"] = "human"
    confidence: float = Field(default=1.0, ge=0.0, le=1.0)
    annotator_id: Optional[str] = None

    def to_core(self) -> _docs.Annotation:
        return _docs.Annotation(
            type=_docs.TargetType(self.type),
            fragments=tuple((int(s), int(e)) for s, e in self.fragments),
            source=self.source,
            confidence=self.confidence,
            annotator_id=self.annotator_id,
        )

    @classmethod
    def from_core(cls, ann: _docs.Annotation) -> "AnnotationIn":
        return cls(
            type=ann.type.value,
            fragments=[(s, e) for s, e in ann.fragments],
            source=ann.source,  # type: ignore[arg-type]
            confidence=ann.confidence,
            annotator_id=ann.annotator_id,
        )


class MetadataIn(BaseModel):
    isin: Optional[str] = None
    issue_date: Optional[_dt.date] = None
    issuer_group: Optional[str] = None
    asset_type: Optional[str] = None
    extra: dict[str, str] = Field(default_factory=dict)

    def to_core(self) -> _docs.DocumentMetadata:
        return _docs.DocumentMetadata(
            isin=self.isin,
            issue_date=self.issue_date,
            issuer_group=self.issuer_group,
            asset_type=self.asset_type,
            extra=dict(self.extra),
        )

    @classmethod
    def from_core(cls, md: _docs.DocumentMetadata) -> "MetadataIn":
        return cls(
            isin=md.isin, issue_date=md.issue_date, issuer_group=md.issuer_group,
            asset_type=md.asset_type, extra=dict(md.extra),
        )


class DocumentIn(BaseModel):
    id: str
    text: str
    tokens: Optional[list[TokenSpan]] = None
    metadata: MetadataIn = Field(default_factory=MetadataIn)
    annotations: list[AnnotationIn] = Field(default_factory=list)

    def to_core(self) -> _docs.Document:
        if self.tokens:
            tokens = tuple(
                _docs.Token(i, t.start, t.end, self.text[t.start : t.end])
                for i, t in enumerate(self.tokens)
            )
        else:
            tokens = _docs.baseline_tokenize(self.text)
        return _docs.Document(
            id=self.id,
            text=self.text,
            tokens=tokens,
            metadata=self.metadata.to_core(),
            annotations=tuple(a.to_core() for a in self.annotations),
        )

    @classmethod
    def from_core(cls, doc: _docs.Document) -> "DocumentIn":
        return cls(
            id=doc.id,
            text=doc.text,
            tokens=[TokenSpan(start=t.start, end=t.end) for t in doc.tokens],
            metadata=MetadataIn.from_core(doc.metadata),
            annotations=[AnnotationIn.from_core(a) for a in doc.annotations],
        )


class AlternativeOut(BaseModel):
    value: str
    confidence: float
    fragments: list[tuple[int, int]]


class DecisionOut(BaseModel):
    criterion: str
    outcome: Literal["eligible", "ineligible", "review"]
    chosen_value: Optional[str]
    confidence: float
    alternatives: list[AlternativeOut]
    explanation: str
    supporting_fragments: list[tuple[int, int]]

    @classmethod
    def from_core(cls, d: _decider.CriterionDecision) -> "DecisionOut":
        return cls(
            criterion=d.criterion.value,
            outcome=d.outcome,  # type: ignore[arg-type]
            chosen_value=d.chosen_value,
            confidence=d.confidence,
            alternatives=[
                AlternativeOut(value=a.value, confidence=a.confidence,
                               fragments=[(s, e) for s, e in a.fragments])
                for a in d.alternatives
            ],
            explanation=d.explanation,
            supporting_fragments=[(s, e) for s, e in d.supporting_fragments],
        )


class VerdictOut(BaseModel):
    overall: Literal["eligible", "ineligible", "review"]
    decisions: list[DecisionOut]

    @classmethod
    def from_core(cls, verdict: _decider.Verdict) -> "VerdictOut":
        return cls(
            overall=verdict.overall,  # type: ignore[arg-type]
            decisions=[DecisionOut.from_core(d) for d in verdict.decisions],
        )


class PredictResponse(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    document_id: str
    verdict: VerdictOut
    annotations: list[AnnotationIn]
    model_version: str
    config_version: str
    warnings: list[str] = Field(default_factory=list)
    timings: dict[str, float] = Field(default_factory=dict)


class FeedbackActionIn(BaseModel):
    action: Literal["confirmed", "edited", "added", "deleted"]
    annotation: AnnotationIn


class FeedbackIn(BaseModel):
    reviewer_id: str
    actions: list[FeedbackActionIn] = Field(default_factory=list)
    annotations: list[AnnotationIn]
    timestamp: Optional[str] = None

    def to_core(self, document_id: str, timestamp: str) -> _store.FeedbackRecord:
        return _store.FeedbackRecord(
            document_id=document_id,
            reviewer_id=self.reviewer_id,
            actions=tuple(
                _store.FeedbackAction(action=a.action, annotation=a.annotation.to_core())
                for a in self.actions
            ),
            annotations=tuple(a.to_core() for a in self.annotations),
            timestamp=self.timestamp or timestamp,
        )


class FeedbackAck(BaseModel):
    status: str
    document_id: str
    feedback_count: int


class HealthResponse(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    status: str
    model_version: str
    config_version: str
    backend: str
