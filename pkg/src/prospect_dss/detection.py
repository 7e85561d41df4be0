"""Evidence detection: the span-extraction boundary with two backends.

The baseline backend is a deterministic rule/gazetteer engine. The remote
backend fetches per-window label score grids from an external model server
over a small JSON protocol and decodes them with the constrained Viterbi
decoder; the neural models themselves stay out of process.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import httpx

from .bio import BioTag, iter_windows
from .decoding import (
    LabelGrid,
    NormalizationError,
    TransitionMatrix,
    constrained_viterbi,
    default_bio_transitions,
    span_confidence,
)
from .documents import Annotation, Document, TargetType, sort_annotations


class BackendUnavailable(RuntimeError):
    """The inference server cannot be reached or answered with a server error."""


class ProtocolError(RuntimeError):
    """The inference server answered, but not with a usable label grid."""


class EvidenceBackend(Protocol):
    name: str

    def detect(self, doc: Document) -> list[Annotation]: ...


@dataclass(frozen=True)
class GazetteerRule:
    """One detection rule: a literal list or a regex for a single type.

    Literal lists match at word boundaries; regexes may capture group 1 as
    the annotated span. ``normalizer`` hints how the decider should read the
    matched surface ("currency", "amount", "isin", or None for plain text);
    the "isin" hint additionally gates matches through the checksum.
    """

    type: TargetType
    confidence: float
    literals: tuple[str, ...] = ()
    pattern: Optional[str] = None
    group: int = 0
    case_insensitive: bool = False
    normalizer: Optional[str] = None

    def __post_init__(self):
        if not self.literals and self.pattern is None:
            raise ValueError("rule needs literals or a pattern")
        if not 0.0 < self.confidence <= 1.0:
            raise ValueError("rule confidence must be in (0,1]")
        if self.pattern is not None:
            re.compile(self.pattern)

    def candidates(self, text: str) -> list[tuple[int, int]]:
        flags = re.IGNORECASE if self.case_insensitive else 0
        spans: list[tuple[int, int]] = []
        if self.pattern is not None:
            for m in re.finditer(self.pattern, text, flags):
                spans.append(m.span(self.group))
        for literal in self.literals:
            for m in re.finditer(rf"\b{re.escape(literal)}\b", text, flags):
                spans.append(m.span())
        return spans


def validate_isin(candidate: str) -> bool:
    """ISO 6166 shape plus Luhn check over the letter-expanded digit string."""
    if len(candidate) != 12:
        return False
    if not (candidate[:2].isalpha() and candidate[:2].isupper()):
        return False
    if not candidate.isalnum():
        return False
    digits: list[int] = []
    for ch in candidate.upper():
        if ch.isdigit():
            digits.append(int(ch))
        else:
            digits.extend(divmod(ord(ch) - ord("A") + 10, 10))
    total = 0
    for i, d in enumerate(reversed(digits)):
        if i % 2 == 1:
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return total % 10 == 0


_AMOUNT = r"(?:\d{1,3}(?:\.\d{3})+(?:,\d+)?|\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:[.,]\d+)?)"


def default_rules() -> list[GazetteerRule]:
    """The shipped rule set: currency words, German/English amount patterns,
    checksum-gated ISIN candidates, and phrase gazetteers for the remaining
    types. Closed-vocabulary matches carry confidence 1.0, patterns 0.8."""
    T = TargetType
    return [
        GazetteerRule(
            type=T.CURRENCY, confidence=1.0, case_insensitive=True, normalizer="currency",
            literals=(
                "Euro", "EUR", "US-Dollar", "US Dollar", "USD", "Pfund Sterling",
                "Pound Sterling", "GBP", "Japanischer Yen", "Yen", "JPY",
                "Schweizer Franken", "Swiss Franc", "CHF",
            ),
        ),
        GazetteerRule(
            type=T.ISIN, confidence=1.0, normalizer="isin",
            pattern=r"\b[A-Z]{2}[A-Z0-9]{9}[0-9]\b",
        ),
        GazetteerRule(
            type=T.PRINCIPAL_AMOUNT, confidence=0.8, normalizer="amount",
            pattern=rf"\b(?:\d{{1,3}}(?:\.\d{{3}})+(?:,\d+)?|\d{{1,3}}(?:,\d{{3}})+(?:\.\d+)?)\b",
        ),
        GazetteerRule(
            type=T.EARLY_REDEMPTION_AMOUNT, confidence=0.8, normalizer="amount", group=1,
            pattern=rf"(?:Vorzeitiger Rückzahlungsbetrag|Early Redemption Amount)\s*:\s*({_AMOUNT})",
        ),
        GazetteerRule(
            type=T.SPECIAL_TERMINATION_AMOUNT, confidence=0.8, normalizer="amount", group=1,
            pattern=rf"(?:Sonderkündigungsbetrag|Special Termination Amount)\s*:\s*({_AMOUNT})",
        ),
        GazetteerRule(
            type=T.REDEMPTION_AT_MATURITY_AMOUNT, confidence=0.8, normalizer="amount", group=1,
            pattern=rf"(?:Rückzahlungsbetrag bei Fälligkeit|Final Redemption Amount)\s*:\s*({_AMOUNT})",
        ),
        GazetteerRule(
            type=T.REDEMPTION_AT_MATURITY, confidence=1.0, case_insensitive=True,
            literals=("Rückzahlung zum Nennbetrag", "Redemption at par"),
        ),
        GazetteerRule(
            type=T.EARLY_REDEMPTION, confidence=1.0, case_insensitive=True,
            literals=("Vorzeitige Rückzahlung", "Early Redemption Right"),
        ),
        GazetteerRule(
            type=T.SPECIAL_TERMINATION, confidence=1.0, case_insensitive=True,
            literals=("Sonderkündigungsrecht der Emittentin", "Issuer Special Termination Right"),
        ),
        GazetteerRule(
            type=T.TYPE_OF_INSTRUMENT, confidence=1.0,
            literals=(
                "Inhaberschuldverschreibung", "Schuldverschreibung", "Anleihe",
                "Bearer Note", "Note", "Bond", "Zertifikat", "Certificate",
            ),
        ),
        GazetteerRule(
            type=T.STATUS_SENIOR_NON_PREFERRED, confidence=1.0, case_insensitive=True,
            literals=("Senior Non-Preferred",),
        ),
        GazetteerRule(
            type=T.STATUS_NON_PREFERRED, confidence=1.0, case_insensitive=True,
            literals=("nachrangige Verbindlichkeiten", "subordinated obligations"),
        ),
        GazetteerRule(
            type=T.COUPON_FIXED, confidence=1.0, case_insensitive=True,
            literals=("Fester Zinssatz", "Festzins", "Fixed Rate"),
        ),
        GazetteerRule(
            type=T.COUPON_VARIABLE_INDEX, confidence=1.0,
            literals=("EURIBOR", "LIBOR", "SOFR", "ESTR"),
        ),
        GazetteerRule(
            type=T.COUPON_VARIABLE_TENOR, confidence=0.8,
            pattern=r"\b\d{1,2}-(?:Monats|month)\b",
        ),
        GazetteerRule(
            type=T.COUPON_VARIABLE_OPERATOR, confidence=1.0, case_insensitive=True,
            literals=("zuzüglich", "abzüglich", "plus", "minus"),
        ),
        GazetteerRule(
            type=T.COUPON_VARIABLE_MARGIN, confidence=0.8,
            pattern=r"\b\d+[.,]\d+\s?(?:Prozentpunkte|Basispunkte|percentage points|basis points)\b",
        ),
    ]


def detect_baseline(doc: Document, rules: Sequence[GazetteerRule]) -> list[Annotation]:
    """All non-overlapping matches per rule, longest match first within a rule."""
    annotations: list[Annotation] = []
    for rule in rules:
        candidates = rule.candidates(doc.text)
        if rule.normalizer == "isin":
            candidates = [
                (s, e) for s, e in candidates if validate_isin(doc.text[s:e])
            ]
        candidates.sort(key=lambda span: (-(span[1] - span[0]), span[0]))
        taken: list[tuple[int, int]] = []
        for s, e in candidates:
            if any(s < te and ts < e for ts, te in taken):
                continue
            taken.append((s, e))
        for s, e in sorted(taken):
            annotations.append(
                Annotation(
                    type=rule.type, fragments=((s, e),),
                    source="baseline", confidence=rule.confidence,
                )
            )
    return list(sort_annotations(annotations))


class BaselineBackend:
    """Deterministic rule/gazetteer evidence detection."""

    name = "baseline"

    def __init__(self, rules: Optional[Sequence[GazetteerRule]] = None):
        self.rules = list(rules) if rules is not None else default_rules()

    def detect(self, doc: Document) -> list[Annotation]:
        return detect_baseline(doc, self.rules)


@dataclass(frozen=True)
class RemoteModelConfig:
    endpoint: str
    timeout: float = 10.0
    model_ids: dict[str, str] = field(default_factory=dict)
    max_seq_len: int = 256
    stride: int = 64

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")


def _parse_grid(payload: object, type_: TargetType, n_tokens: int) -> LabelGrid:
    if not isinstance(payload, dict) or "scores" not in payload:
        raise ProtocolError("response missing 'scores'")
    columns = payload.get("columns")
    if columns is not None and list(columns) != ["B", "I", "O"]:
        raise ProtocolError(f"unexpected column order {columns!r}")
    scores = payload["scores"]
    if not isinstance(scores, list) or len(scores) != n_tokens:
        raise ProtocolError(
            f"expected {n_tokens} score rows, got "
            f"{len(scores) if isinstance(scores, list) else type(scores).__name__}"
        )
    try:
        return LabelGrid(type=type_, scores=scores)
    except (ValueError, TypeError) as exc:
        raise ProtocolError(f"malformed grid: {exc}") from exc


class RemoteBackend:
    """Fetches label grids from a model server and decodes them.

    Wire protocol — request: {doc_id, type, tokens: [surface...],
    window: [start, end)}; response: {scores: m x 3 log-probabilities,
    column order ["B","I","O"]}.
    """

    name = "remote"

    def __init__(
        self,
        config: RemoteModelConfig,
        transitions: Optional[TransitionMatrix] = None,
        transport: Optional[httpx.BaseTransport] = None,
    ):
        self.config = config
        self.transitions = transitions if transitions is not None else default_bio_transitions()
        self._transport = transport

    def detect(self, doc: Document) -> list[Annotation]:
        windows = iter_windows(len(doc.tokens), self.config.max_seq_len, self.config.stride)
        if not windows:
            return []
        jobs = [(type_, ws, we) for type_ in TargetType for ws, we in windows]
        with httpx.Client(
            timeout=self.config.timeout, transport=self._transport
        ) as client:
            with ThreadPoolExecutor(max_workers=8) as pool:
                results = list(
                    pool.map(lambda job: self._detect_window(client, doc, *job), jobs)
                )
        merged: dict[tuple[TargetType, tuple[tuple[int, int], ...]], Annotation] = {}
        for annotations in results:
            for ann in annotations:
                key = (ann.type, ann.fragments)
                kept = merged.get(key)
                if kept is None or ann.confidence > kept.confidence:
                    merged[key] = ann
        return list(sort_annotations(merged.values()))

    def _detect_window(
        self, client: httpx.Client, doc: Document, type_: TargetType, ws: int, we: int
    ) -> list[Annotation]:
        window_tokens = doc.tokens[ws:we]
        request = {
            "doc_id": doc.id,
            "type": type_.value,
            "tokens": [t.surface for t in window_tokens],
            "window": [ws, we],
        }
        model_id = self.config.model_ids.get(type_.value)
        if model_id:
            request["model"] = model_id
        try:
            response = client.post(self.config.endpoint, json=request)
        except (httpx.TimeoutException, httpx.TransportError) as exc:
            raise BackendUnavailable(f"inference server unreachable: {exc}") from exc
        if response.status_code >= 500:
            raise BackendUnavailable(f"inference server error {response.status_code}")
        if response.status_code >= 400:
            raise ProtocolError(f"inference request rejected: {response.status_code}")
        try:
            payload = response.json()
        except ValueError as exc:
            raise ProtocolError(f"non-JSON response: {exc}") from exc
        grid = _parse_grid(payload, type_, len(window_tokens))

        tagged = constrained_viterbi(grid, self.transitions)
        annotations = []
        run_start: Optional[int] = None
        for i, tag in enumerate(list(tagged.tags) + [BioTag.O]):
            if tag is BioTag.B:
                if run_start is not None:
                    annotations.append(self._make_annotation(grid, window_tokens, run_start, i))
                run_start = i
            elif tag is BioTag.O and run_start is not None:
                annotations.append(self._make_annotation(grid, window_tokens, run_start, i))
                run_start = None
        return annotations

    def _make_annotation(self, grid, window_tokens, start: int, end: int) -> Annotation:
        try:
            confidence = span_confidence(grid, (start, end))
        except NormalizationError as exc:
            raise ProtocolError(f"grid rows are not log-probabilities: {exc}") from exc
        return Annotation(
            type=grid.type,
            fragments=((window_tokens[start].start, window_tokens[end - 1].end),),
            source="model",
            confidence=confidence,
        )


class CompositeBackend:
    """Runs several backends and merges their outputs deterministically."""

    def __init__(self, backends: Sequence[EvidenceBackend]):
        self.backends = list(backends)
        self.name = "+".join(b.name for b in self.backends)

    def detect(self, doc: Document) -> list[Annotation]:
        merged: dict[tuple, Annotation] = {}
        for backend in self.backends:
            for ann in backend.detect(doc):
                key = (ann.type, ann.fragments, ann.source)
                kept = merged.get(key)
                if kept is None or ann.confidence > kept.confidence:
                    merged[key] = ann
        return list(sort_annotations(merged.values()))
