"""Decoding per-token label score grids into transition-consistent BIO tags.

Scores are log-domain and additive. Transition constraints are hard by
default (0 for allowed, -inf for start->I and O->I); a learned matrix can be
loaded from a 4x3 table file instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bio import BioTag, TaggedSequence
from .documents import TargetType

# Column order everywhere: B, I, O. Transition rows: start, B, I, O.
LABELS = (BioTag.B, BioTag.I, BioTag.O)
_B, _I, _O = 0, 1, 2
_START = 0  # row index in the transition matrix; label rows are offset by 1

NEG_INF = float("-inf")


class NormalizationError(ValueError):
    """A grid row does not exponentiate to a probability distribution."""


@dataclass(frozen=True)
class LabelGrid:
    """m x 3 log-domain scores for one target type, columns ordered B, I, O."""

    type: TargetType
    scores: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"grid must be m x 3, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("grid entries must be finite")
        object.__setattr__(self, "scores", arr)

    def __len__(self) -> int:
        return self.scores.shape[0]


@dataclass(frozen=True)
class TransitionMatrix:
    """4 x 3 log-domain transition scores (rows start,B,I,O; columns B,I,O).

    start->I and O->I are -inf by construction; every other entry is finite.
    """

    scores: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=float)
        if arr.shape != (4, 3):
            raise ValueError(f"transition matrix must be 4 x 3, got {arr.shape}")
        if arr[_START][_I] != NEG_INF or arr[1 + _O][_I] != NEG_INF:
            raise ValueError("start->I and O->I must be -inf")
        mask = np.ones((4, 3), dtype=bool)
        mask[_START][_I] = mask[1 + _O][_I] = False
        if not np.isfinite(arr[mask]).all():
            raise ValueError("all transitions except start->I and O->I must be finite")
        object.__setattr__(self, "scores", arr)

    def score(self, prev: int | None, label: int) -> float:
        row = _START if prev is None else 1 + prev
        return float(self.scores[row][label])


def default_bio_transitions() -> TransitionMatrix:
    """Hard constraints only: 0 for every allowed transition."""
    arr = np.zeros((4, 3))
    arr[_START][_I] = NEG_INF
    arr[1 + _O][_I] = NEG_INF
    return TransitionMatrix(arr)


def load_transitions(path: str) -> TransitionMatrix:
    """Read a 4x3 whitespace-separated table; -inf is spelled "-inf"."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([float(cell) for cell in line.split()])
    return TransitionMatrix(np.array(rows))


def greedy_decode(grid: LabelGrid) -> TaggedSequence:
    """Per-token argmax; ties break in column order B before I before O.

    Output may be transition-invalid; downstream decoding repairs stray I.
    """
    picks = np.argmax(grid.scores, axis=1)
    return TaggedSequence(type=grid.type, tags=tuple(LABELS[i] for i in picks))


def constrained_viterbi(grid: LabelGrid, trans: TransitionMatrix) -> TaggedSequence:
    """Best transition-valid tag sequence under emissions plus transitions.

    Among equal-scoring sequences the lexicographically smallest under
    B < I < O wins, matching exhaustive enumeration exactly.
    """
    m = len(grid)
    if m == 0:
        return TaggedSequence(type=grid.type, tags=())

    # Per label: (path score, label-index prefix). Prefixes are kept whole so
    # score ties resolve to the lexicographically smallest full sequence.
    states: list[tuple[float, tuple[int, ...]]] = []
    for y in range(3):
        score = trans.score(None, y) + float(grid.scores[0, y])
        states.append((score, (y,)))

    for t in range(1, m):
        nxt: list[tuple[float, tuple[int, ...]]] = []
        for y in range(3):
            emission = float(grid.scores[t, y])
            cands = [
                (states[p][0] + trans.score(p, y) + emission, states[p][1] + (y,))
                for p in range(3)
            ]
            best_score = max(score for score, _ in cands)
            best_prefix = min(prefix for score, prefix in cands if score == best_score)
            nxt.append((best_score, best_prefix))
        states = nxt

    best_score = max(score for score, _ in states)
    if best_score == NEG_INF:  # unreachable: O is always allowed
        raise RuntimeError("no transition-valid sequence found")
    best_path = min(path for score, path in states if score == best_score)
    return TaggedSequence(type=grid.type, tags=tuple(LABELS[i] for i in best_path))


def _check_rows_normalized(scores: np.ndarray, tolerance: float = 1e-6) -> None:
    sums = np.exp(scores).sum(axis=1)
    bad = np.nonzero(np.abs(sums - 1.0) > tolerance)[0]
    if bad.size:
        raise NormalizationError(
            f"grid row {int(bad[0])} exponentiates to {sums[bad[0]]:.6f}, expected 1"
        )


def span_confidence(grid: LabelGrid, token_range: tuple[int, int]) -> float:
    """Geometric mean probability of the B I I ... tags over a decoded span.

    Rows must be log-probabilities (each row sums to 1 after exponentiation,
    tolerance 1e-6); otherwise NormalizationError.
    """
    _check_rows_normalized(grid.scores)
    start, end = token_range
    if not 0 <= start < end <= len(grid):
        raise ValueError(f"token range [{start},{end}) outside grid of {len(grid)} rows")
    log_total = float(grid.scores[start, _B])
    for t in range(start + 1, end):
        log_total += float(grid.scores[t, _I])
    value = math.exp(log_total / (end - start))
    return min(1.0, max(0.0, value))
