"""Conversion between character-offset annotations and per-type BIO tag
sequences, plus sliding-window training example construction.

Each target type gets its own independent tag sequence, so overlaps between
annotations of different types are always expressible. Overlap between two
annotations of the *same* type cannot be encoded in a single sequence and
raises :class:`OverlapError`.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .documents import Annotation, Document, TargetType, Token

logger = logging.getLogger(__name__)

DEFAULT_MAX_SEQ_LEN = 256
DEFAULT_STRIDE = 64


class BioTag(str, Enum):
    B = "B"
    I = "I"
    O = "O"


@dataclass(frozen=True)
class TaggedSequence:
    """BIO tags for one target type, one per token of the source window."""

    type: TargetType
    tags: tuple[BioTag, ...]


@dataclass(frozen=True)
class TrainingExample:
    """One windowed token-classification example covering all 17 types."""

    doc_id: str
    window: tuple[int, int]  # [start_token, end_token)
    tokens: tuple[str, ...]
    labels: dict[TargetType, tuple[BioTag, ...]]


class OverlapError(ValueError):
    """Two same-type annotations cover a common token."""

    def __init__(self, type_: TargetType, token_index: int, first: Annotation, second: Annotation):
        self.type = type_
        self.token_index = token_index
        self.first = first
        self.second = second
        super().__init__(
            f"annotations of type {type_.value} both cover token {token_index}: "
            f"{first.fragments} vs {second.fragments}"
        )


def align_fragment_to_tokens(fragment: tuple[int, int], tokens: Sequence[Token]) -> list[int]:
    """Indices of every token overlapping the fragment by at least one character."""
    fs, fe = fragment
    hit = []
    for tok in tokens:
        if tok.start < fe and fs < tok.end:
            hit.append(tok.index)
    return hit


def _covered_runs(ann: Annotation, tokens: Sequence[Token]) -> list[list[int]]:
    """Covered-token runs of one annotation, one run per fragment.

    Runs that share tokens (fragments widening onto the same token) are merged
    so the annotation never collides with itself.
    """
    index_base = tokens[0].index if tokens else 0
    runs: list[list[int]] = []
    for frag in ann.fragments:
        covered = [i - index_base for i in align_fragment_to_tokens(frag, tokens)]
        if not covered:
            logger.warning(
                "fragment [%d,%d) of %s annotation overlaps no token; skipped",
                frag[0], frag[1], ann.type.value,
            )
            continue
        if runs and covered[0] <= runs[-1][-1]:
            merged = sorted(set(runs[-1]) | set(covered))
            runs[-1] = merged
        else:
            runs.append(covered)
    return runs


def encode_bio(tokens: Sequence[Token], annotations: Iterable[Annotation]) -> TaggedSequence:
    """Encode same-type annotations as one BIO sequence over ``tokens``.

    The first token of each covered run gets B, subsequent covered tokens I;
    a discontinuous annotation opens a new B at each fragment's first token.
    """
    anns = list(annotations)
    if not anns:
        raise ValueError("encode_bio needs at least one annotation to determine the type")
    type_ = anns[0].type
    for a in anns:
        if a.type is not type_:
            raise ValueError(f"mixed types in encode_bio: {type_.value} vs {a.type.value}")

    tags = [BioTag.O] * len(tokens)
    owner: dict[int, Annotation] = {}
    for ann in anns:
        for run in _covered_runs(ann, tokens):
            for pos_in_run, idx in enumerate(run):
                if idx in owner and owner[idx] is not ann:
                    raise OverlapError(type_, idx, owner[idx], ann)
                owner[idx] = ann
                tags[idx] = BioTag.B if pos_in_run == 0 else BioTag.I
    return TaggedSequence(type=type_, tags=tuple(tags))


def encode_bio_for_type(
    tokens: Sequence[Token], annotations: Iterable[Annotation], type_: TargetType
) -> TaggedSequence:
    """Like encode_bio, but yields an all-O sequence when no annotation matches."""
    of_type = [a for a in annotations if a.type is type_]
    if not of_type:
        return TaggedSequence(type=type_, tags=tuple([BioTag.O] * len(tokens)))
    return encode_bio(tokens, of_type)


def decode_bio(
    tokens: Sequence[Token],
    tagged: TaggedSequence,
    source: str = "model",
    confidence: float = 1.0,
) -> list[Annotation]:
    """Decode a BIO sequence back into single-fragment annotations.

    Maximal B[I]* runs become annotations spanning first token start to last
    token end. An invalid I (sequence-initial or directly after O) is repaired
    by treating it as B; repairs are logged.
    """
    if len(tagged.tags) != len(tokens):
        raise ValueError(
            f"tag count {len(tagged.tags)} != token count {len(tokens)}"
        )
    annotations: list[Annotation] = []
    run: list[Token] = []

    def close_run():
        if run:
            annotations.append(
                Annotation(
                    type=tagged.type,
                    fragments=((run[0].start, run[-1].end),),
                    source=source,
                    confidence=confidence,
                )
            )
            run.clear()

    prev = BioTag.O
    for tok, tag in zip(tokens, tagged.tags):
        if tag is BioTag.B:
            close_run()
            run.append(tok)
        elif tag is BioTag.I:
            if prev is BioTag.O:
                logger.warning(
                    "invalid I at token %d (%s) repaired as B", tok.index, tagged.type.value
                )
                close_run()
            run.append(tok)
        else:
            close_run()
        prev = tag
    close_run()
    return annotations


def iter_windows(n_tokens: int, max_seq_len: int, stride: int) -> list[tuple[int, int]]:
    """Sliding [start, end) token windows covering every token at least once."""
    if max_seq_len < 2:
        raise ValueError("max_seq_len must be >= 2")
    if not 1 <= stride <= max_seq_len:
        raise ValueError("stride must satisfy 1 <= stride <= max_seq_len")
    if n_tokens == 0:
        return []
    windows = []
    start = 0
    while True:
        end = min(start + max_seq_len, n_tokens)
        windows.append((start, end))
        if end >= n_tokens:
            break
        start += stride
    return windows


def build_training_examples(
    doc: Document,
    max_seq_len: int = DEFAULT_MAX_SEQ_LEN,
    stride: int = DEFAULT_STRIDE,
) -> list[TrainingExample]:
    """Window the document and BIO-encode every target type per window.

    Annotation runs cut at a window edge re-open with B in the next window,
    which falls out of encoding each window independently.
    """
    examples = []
    for ws, we in iter_windows(len(doc.tokens), max_seq_len, stride):
        window_tokens = doc.tokens[ws:we]
        lo, hi = window_tokens[0].start, window_tokens[-1].end
        labels: dict[TargetType, tuple[BioTag, ...]] = {}
        for type_ in TargetType:
            clipped = []
            for ann in doc.annotations:
                if ann.type is not type_:
                    continue
                frags = tuple(
                    (max(s, lo), min(e, hi))
                    for s, e in ann.fragments
                    if s < hi and lo < e
                )
                if frags:
                    clipped.append(
                        Annotation(type=type_, fragments=frags, source=ann.source,
                                   confidence=ann.confidence, annotator_id=ann.annotator_id)
                    )
            labels[type_] = encode_bio_for_type(window_tokens, clipped, type_).tags
        examples.append(
            TrainingExample(
                doc_id=doc.id,
                window=(ws, we),
                tokens=tuple(t.surface for t in window_tokens),
                labels=labels,
            )
        )
    return examples


def training_example_to_json(example: TrainingExample) -> str:
    """One line of the training export stream."""
    record = {
        "doc_id": example.doc_id,
        "window": [example.window[0], example.window[1]],
        "tokens": list(example.tokens),
        "labels": {
            type_.value: [tag.value for tag in example.labels[type_]]
            for type_ in TargetType
        },
    }
    return json.dumps(record, ensure_ascii=False)
