"""Core data model: documents, tokens, annotations and the criterion taxonomy.

All character offsets throughout the package are Unicode code point offsets
into ``Document.text``, never byte offsets. Every type here is immutable
value data after construction and safe to share across threads.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Optional, Sequence


class TargetType(str, Enum):
    """The 17 retained annotation types."""

    COUPON_FIXED = "coupon_fixed"
    COUPON_VARIABLE_INDEX = "coupon_variable_index"
    COUPON_VARIABLE_MARGIN = "coupon_variable_margin"
    COUPON_VARIABLE_OPERATOR = "coupon_variable_operator"
    COUPON_VARIABLE_TENOR = "coupon_variable_tenor"
    CURRENCY = "currency"
    EARLY_REDEMPTION_AMOUNT = "early_redemption_amount"
    EARLY_REDEMPTION = "early_redemption"
    ISIN = "isin"
    PRINCIPAL_AMOUNT = "principal_amount"
    REDEMPTION_AT_MATURITY_AMOUNT = "redemption_at_maturity_amount"
    REDEMPTION_AT_MATURITY = "redemption_at_maturity"
    SPECIAL_TERMINATION = "special_termination"
    SPECIAL_TERMINATION_AMOUNT = "special_termination_amount"
    STATUS_NON_PREFERRED = "status_non_preferred"
    STATUS_SENIOR_NON_PREFERRED = "status_senior_non_preferred"
    TYPE_OF_INSTRUMENT = "type_of_instrument"


class Criterion(str, Enum):
    """The eight document-level eligibility criteria."""

    COUPON = "Coupon"
    CURRENCY = "Currency"
    EARLY_REDEMPTION_AMOUNT = "EarlyRedemptionAmount"
    PRINCIPAL_AMOUNT = "PrincipalAmount"
    REDEMPTION_AT_MATURITY = "RedemptionAtMaturity"
    SPECIAL_TERMINATION_RIGHT = "SpecialTerminationRight"
    LIQUIDATION_STATUS = "LiquidationStatus"
    TYPE_OF_INSTRUMENT = "TypeOfInstrument"


ANNOTATION_SOURCES = ("human", "model", "baseline")


@dataclass(frozen=True)
class Token:
    """One tokenization unit with its character range in the document text."""

    index: int
    start: int
    end: int
    surface: str


@dataclass(frozen=True)
class Annotation:
    """A typed, possibly discontinuous set of character fragments.

    Fragments are half-open ``[start, end)`` intervals, pairwise
    non-overlapping and sorted by start. Fragments of *different*
    annotations may overlap freely, including within one type.
    """

    type: TargetType
    fragments: tuple[tuple[int, int], ...]
    source: str = "human"
    confidence: float = 1.0
    annotator_id: Optional[str] = None

    def covered_text(self, text: str) -> str:
        return " ".join(text[s:e] for s, e in self.fragments)

    @property
    def start(self) -> int:
        return self.fragments[0][0]

    @property
    def end(self) -> int:
        return self.fragments[-1][1]


@dataclass(frozen=True)
class DocumentMetadata:
    isin: Optional[str] = None
    issue_date: Optional[_dt.date] = None
    issuer_group: Optional[str] = None
    asset_type: Optional[str] = None
    extra: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Document:
    """A prospectus: extracted plain text plus tokens, metadata, annotations."""

    id: str
    text: str
    tokens: tuple[Token, ...] = ()
    metadata: DocumentMetadata = field(default_factory=DocumentMetadata)
    annotations: tuple[Annotation, ...] = ()

    def with_annotations(self, annotations: Iterable[Annotation]) -> "Document":
        return Document(
            id=self.id,
            text=self.text,
            tokens=self.tokens,
            metadata=self.metadata,
            annotations=tuple(annotations),
        )


def baseline_tokenize(text: str) -> tuple[Token, ...]:
    """Segment on whitespace, splitting punctuation off as single-char tokens.

    A token is either a maximal run of alphanumeric characters or a single
    non-alphanumeric, non-whitespace character. Concatenating surfaces with
    the original gaps reconstructs the text.
    """
    tokens: list[Token] = []
    run_start: Optional[int] = None
    for pos, ch in enumerate(text):
        if ch.isalnum():
            if run_start is None:
                run_start = pos
            continue
        if run_start is not None:
            tokens.append(Token(len(tokens), run_start, pos, text[run_start:pos]))
            run_start = None
        if not ch.isspace():
            tokens.append(Token(len(tokens), pos, pos + 1, ch))
    if run_start is not None:
        tokens.append(Token(len(tokens), run_start, len(text), text[run_start:]))
    return tuple(tokens)


def validate_document(doc: Document) -> list[str]:
    """Check all Document/Token/Annotation invariants.

    Returns an empty list iff the document is well-formed; otherwise one
    human-readable violation per problem, naming field and offsets.
    """
    violations: list[str] = []
    n = len(doc.text)

    prev_end = -1
    for tok in doc.tokens:
        if tok.start >= tok.end:
            violations.append(f"token {tok.index}: start >= end ([{tok.start},{tok.end}))")
            continue
        if tok.start < 0 or tok.end > n:
            violations.append(
                f"token {tok.index}: range [{tok.start},{tok.end}) outside text bounds [0,{n})"
            )
            continue
        if tok.start < prev_end:
            violations.append(
                f"token {tok.index}: start {tok.start} overlaps previous token ending at {prev_end}"
            )
        if tok.surface != doc.text[tok.start : tok.end]:
            violations.append(
                f"token {tok.index}: surface {tok.surface!r} != text slice "
                f"{doc.text[tok.start:tok.end]!r} at [{tok.start},{tok.end})"
            )
        prev_end = tok.end

    for i, ann in enumerate(doc.annotations):
        if not ann.fragments:
            violations.append(f"annotation {i} ({ann.type.value}): empty fragment list")
            continue
        prev_frag_end = -1
        for s, e in ann.fragments:
            if s >= e:
                violations.append(
                    f"annotation {i} ({ann.type.value}): empty fragment [{s},{e})"
                )
                continue
            if s < 0 or e > n:
                violations.append(
                    f"annotation {i} ({ann.type.value}): fragment out of bounds "
                    f"[{s},{e}) in text of length {n}"
                )
            if s < prev_frag_end:
                violations.append(
                    f"annotation {i} ({ann.type.value}): fragment [{s},{e}) overlaps "
                    f"or is unsorted after end {prev_frag_end}"
                )
            prev_frag_end = max(prev_frag_end, e)
        if not 0.0 <= ann.confidence <= 1.0:
            violations.append(
                f"annotation {i} ({ann.type.value}): confidence {ann.confidence} outside [0,1]"
            )
        if ann.source not in ANNOTATION_SOURCES:
            violations.append(
                f"annotation {i} ({ann.type.value}): unknown source {ann.source!r}"
            )

    return violations


# --- serialization -----------------------------------------------------------
#
# The wire record (used by all endpoints, the store and the CLI):
#   {id, text, tokens?: [{start,end}], metadata, annotations:
#    [{type, fragments: [[start,end], ...], source, confidence, annotator_id?}]}
# Offsets are Unicode code points. Tokens are optional; when absent,
# baseline_tokenize applies.


def annotation_to_dict(ann: Annotation) -> dict[str, Any]:
    d: dict[str, Any] = {
        "type": ann.type.value,
        "fragments": [[s, e] for s, e in ann.fragments],
        "source": ann.source,
        "confidence": ann.confidence,
    }
    if ann.annotator_id is not None:
        d["annotator_id"] = ann.annotator_id
    return d


def annotation_from_dict(d: dict[str, Any]) -> Annotation:
    return Annotation(
        type=TargetType(d["type"]),
        fragments=tuple((int(s), int(e)) for s, e in d["fragments"]),
        source=d.get("source", "human"),
        confidence=float(d.get("confidence", 1.0)),
        annotator_id=d.get("annotator_id"),
    )


def metadata_to_dict(md: DocumentMetadata) -> dict[str, Any]:
    d: dict[str, Any] = {}
    if md.isin is not None:
        d["isin"] = md.isin
    if md.issue_date is not None:
        d["issue_date"] = md.issue_date.isoformat()
    if md.issuer_group is not None:
        d["issuer_group"] = md.issuer_group
    if md.asset_type is not None:
        d["asset_type"] = md.asset_type
    if md.extra:
        d["extra"] = dict(md.extra)
    return d


def metadata_from_dict(d: dict[str, Any]) -> DocumentMetadata:
    issue_date = d.get("issue_date")
    return DocumentMetadata(
        isin=d.get("isin"),
        issue_date=_dt.date.fromisoformat(issue_date) if issue_date else None,
        issuer_group=d.get("issuer_group"),
        asset_type=d.get("asset_type"),
        extra=dict(d.get("extra", {})),
    )


def document_to_dict(doc: Document) -> dict[str, Any]:
    return {
        "id": doc.id,
        "text": doc.text,
        "tokens": [{"start": t.start, "end": t.end} for t in doc.tokens],
        "metadata": metadata_to_dict(doc.metadata),
        "annotations": [annotation_to_dict(a) for a in doc.annotations],
    }


def document_from_dict(d: dict[str, Any]) -> Document:
    """Build a Document from its wire record.

    When the record carries no tokens, the baseline tokenizer supplies them.
    """
    text = d["text"]
    raw_tokens = d.get("tokens") or []
    if raw_tokens:
        tokens = tuple(
            Token(i, int(t["start"]), int(t["end"]), text[int(t["start"]) : int(t["end"])])
            for i, t in enumerate(raw_tokens)
        )
    else:
        tokens = baseline_tokenize(text)
    return Document(
        id=str(d["id"]),
        text=text,
        tokens=tokens,
        metadata=metadata_from_dict(d.get("metadata", {})),
        annotations=tuple(annotation_from_dict(a) for a in d.get("annotations", [])),
    )


def dump_document(doc: Document) -> str:
    return json.dumps(document_to_dict(doc), ensure_ascii=False, indent=2)


def load_document(source: str) -> Document:
    return document_from_dict(json.loads(source))


def sort_annotations(annotations: Sequence[Annotation]) -> tuple[Annotation, ...]:
    """Deterministic annotation order: (type, start, end, source, confidence)."""
    return tuple(
        sorted(
            annotations,
            key=lambda a: (a.type.value, a.fragments, a.source, -a.confidence),
        )
    )
