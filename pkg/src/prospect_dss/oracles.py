"""Brute-force oracles.

These deliberately share no code with the operations they check: the Viterbi
oracle enumerates every tag sequence, and the IoU oracle materializes explicit
character index sets. Both are exercised by the test suite only.
"""

from __future__ import annotations

import itertools

from .bio import BioTag, TaggedSequence
from .decoding import NEG_INF, LabelGrid, TransitionMatrix
from .documents import Annotation

_ORACLE_LABELS = (BioTag.B, BioTag.I, BioTag.O)
_MAX_ORACLE_TOKENS = 10


def oracle_viterbi(grid: LabelGrid, trans: TransitionMatrix) -> TaggedSequence:
    """Exhaustively score all 3^m sequences, drop transition-invalid ones,
    take the max with ties broken toward the lexicographically smallest
    sequence under B < I < O."""
    m = len(grid)
    if m > _MAX_ORACLE_TOKENS:
        raise ValueError(f"oracle refuses m={m} > {_MAX_ORACLE_TOKENS} tokens")
    best: tuple[float, tuple[int, ...]] | None = None
    for path in itertools.product(range(3), repeat=m):
        score = 0.0
        prev = None
        valid = True
        for t, y in enumerate(path):
            tr = trans.score(prev, y)
            if tr == NEG_INF:
                valid = False
                break
            score = score + tr + float(grid.scores[t, y])
            prev = y
        if not valid:
            continue
        if best is None or score > best[0] or (score == best[0] and path < best[1]):
            best = (score, path)
    if best is None:
        raise RuntimeError("no valid sequence exists")
    return TaggedSequence(type=grid.type, tags=tuple(_ORACLE_LABELS[y] for y in best[1]))


def oracle_iou(a: Annotation, b: Annotation) -> float:
    """Character-set IoU via explicit index sets."""
    chars_a = set()
    for s, e in a.fragments:
        chars_a.update(range(s, e))
    chars_b = set()
    for s, e in b.fragments:
        chars_b.update(range(s, e))
    union = chars_a | chars_b
    if not union:
        return 0.0
    return len(chars_a & chars_b) / len(union)


def oracle_isin_check_digit(body: str) -> int:
    """Check digit for an 11-char ISIN body, computed directly.

    Letters expand to two digits (A=10 .. Z=35); after appending the check
    digit, every expanded digit originally at reversed position i sits at
    position i+1 from the right, so those at even i are doubled.
    """
    digits: list[int] = []
    for ch in body:
        if ch.isdigit():
            digits.append(int(ch))
        else:
            value = ord(ch.upper()) - ord("A") + 10
            digits.append(value // 10)
            digits.append(value % 10)
    total = 0
    for i, d in enumerate(reversed(digits)):
        if i % 2 == 0:
            d = d * 2
            if d > 9:
                d -= 9
        total += d
    return (10 - total % 10) % 10
