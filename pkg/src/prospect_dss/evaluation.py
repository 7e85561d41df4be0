"""Measurement suite: IoU agreement between annotators, span-level
precision/recall/F1, and the weighted/macro aggregation arithmetic.

IoU is computed over character sets, which handles discontinuous annotations
exactly and degenerates to interval IoU for single fragments. A hull-interval
mode (first start to last end) is available for comparison.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Literal, Optional, Sequence

from .documents import Annotation, Document, TargetType


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class PrfScore:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MatchResult:
    pairs: list[tuple[Annotation, Annotation, float]]
    unmatched_a: list[Annotation]
    unmatched_b: list[Annotation]


@dataclass
class AgreementReport:
    annotator_pair: tuple[str, str]
    per_type: dict[TargetType, float] = field(default_factory=dict)
    # per document, per type: (matched pairs with IoU, unmatched count)
    detail: dict[str, dict[TargetType, MatchResult]] = field(default_factory=dict)


def _merged_intervals(fragments: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    merged: list[tuple[int, int]] = []
    for s, e in sorted(fragments):
        if merged and s <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], e))
        else:
            merged.append((s, e))
    return merged


def _interval_overlap(a: list[tuple[int, int]], b: list[tuple[int, int]]) -> int:
    total = 0
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi:
            total += hi - lo
        if a[i][1] <= b[j][1]:
            i += 1
        else:
            j += 1
    return total


def iou(a: Annotation, b: Annotation, mode: Literal["charset", "hull"] = "charset") -> float:
    """Intersection over union of two annotations' character sets.

    Fragment order and fragmentation do not matter. "hull" collapses each
    annotation to one interval from first start to last end first.
    """
    if mode == "hull":
        ia = [(a.fragments[0][0], a.fragments[-1][1])]
        ib = [(b.fragments[0][0], b.fragments[-1][1])]
    else:
        ia = _merged_intervals(a.fragments)
        ib = _merged_intervals(b.fragments)
    len_a = sum(e - s for s, e in ia)
    len_b = sum(e - s for s, e in ib)
    inter = _interval_overlap(ia, ib)
    union = len_a + len_b - inter
    if union == 0:
        return 0.0
    return inter / union


def match_annotations(
    set_a: Sequence[Annotation], set_b: Sequence[Annotation]
) -> MatchResult:
    """Greedy one-to-one matching by descending IoU; zero-IoU never matches."""
    scored = []
    for i, a in enumerate(set_a):
        for j, b in enumerate(set_b):
            score = iou(a, b)
            if score > 0.0:
                scored.append((score, i, j))
    scored.sort(key=lambda t: (-t[0], t[1], t[2]))
    used_a: set[int] = set()
    used_b: set[int] = set()
    pairs = []
    for score, i, j in scored:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append((set_a[i], set_b[j], score))
    unmatched_a = [a for i, a in enumerate(set_a) if i not in used_a]
    unmatched_b = [b for j, b in enumerate(set_b) if j not in used_b]
    return MatchResult(pairs=pairs, unmatched_a=unmatched_a, unmatched_b=unmatched_b)


def iaa_report(
    docs: Sequence[Document], annotators: Optional[tuple[str, str]] = None
) -> AgreementReport:
    """Agreement between the two annotators present on each document.

    Per type, the corpus score is the mean IoU over matched pairs with every
    unmatched annotation contributing 0 — i.e. document averages weighted by
    annotation-pair count. Pass ``annotators`` explicitly to allow documents
    where one annotator produced nothing; otherwise every document must carry
    exactly two annotator ids.
    """
    pair_ids: Optional[tuple[str, str]] = annotators
    iou_sums: dict[TargetType, float] = defaultdict(float)
    unit_counts: dict[TargetType, int] = defaultdict(int)
    detail: dict[str, dict[TargetType, MatchResult]] = {}

    for doc in docs:
        ids = sorted({a.annotator_id for a in doc.annotations if a.annotator_id})
        if pair_ids is None:
            if len(ids) != 2:
                raise InputError(
                    f"document {doc.id}: expected exactly 2 annotator ids, got {ids}"
                )
            pair_ids = (ids[0], ids[1])
        if not set(ids) <= set(pair_ids):
            raise InputError(
                f"document {doc.id}: annotator ids {ids} outside pair {list(pair_ids)}"
            )
        ids = list(pair_ids)
        doc_detail: dict[TargetType, MatchResult] = {}
        by_type: dict[TargetType, tuple[list[Annotation], list[Annotation]]] = defaultdict(
            lambda: ([], [])
        )
        for ann in doc.annotations:
            if ann.annotator_id == ids[0]:
                by_type[ann.type][0].append(ann)
            elif ann.annotator_id == ids[1]:
                by_type[ann.type][1].append(ann)
        for type_ in sorted(by_type, key=lambda t: t.value):
            first, second = by_type[type_]
            result = match_annotations(first, second)
            doc_detail[type_] = result
            iou_sums[type_] += sum(score for _, _, score in result.pairs)
            unit_counts[type_] += (
                len(result.pairs) + len(result.unmatched_a) + len(result.unmatched_b)
            )
        detail[doc.id] = doc_detail

    if pair_ids is None:
        raise InputError("no documents to report on")
    per_type = {
        type_: (iou_sums[type_] / unit_counts[type_]) if unit_counts[type_] else 0.0
        for type_ in unit_counts
    }
    return AgreementReport(annotator_pair=pair_ids, per_type=per_type, detail=detail)


def _count_true_positives(
    pred: Sequence[Annotation],
    gold: Sequence[Annotation],
    mode: Literal["exact", "overlap"],
    theta: float,
) -> int:
    tp = 0
    consumed = [False] * len(gold)
    for p in pred:
        if mode == "exact":
            for j, g in enumerate(gold):
                if consumed[j]:
                    continue
                if g.type is p.type and tuple(g.fragments) == tuple(p.fragments):
                    consumed[j] = True
                    tp += 1
                    break
        else:
            best_j = -1
            best = 0.0
            for j, g in enumerate(gold):
                if consumed[j] or g.type is not p.type:
                    continue
                score = iou(p, g)
                if score > best:
                    best = score
                    best_j = j
            if best_j >= 0 and best >= theta:
                consumed[best_j] = True
                tp += 1
    return tp


def prf(
    pred: Sequence[Annotation],
    gold: Sequence[Annotation],
    mode: Literal["exact", "overlap"] = "exact",
    theta: float = 0.5,
) -> PrfScore:
    """Span precision/recall/F1 for one type.

    exact: a prediction is TP iff some unconsumed gold has identical type and
    fragment set. overlap: TP iff the best-IoU unconsumed gold reaches theta.
    Empty pred and gold count as perfect by convention.
    """
    if not pred and not gold:
        return PrfScore(precision=1.0, recall=1.0, f1=1.0, support=0)

    tp = _count_true_positives(pred, gold, mode, theta)
    precision = tp / len(pred) if pred else 0.0
    recall = tp / len(gold) if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return PrfScore(precision=precision, recall=recall, f1=f1, support=len(gold))


def weighted_average(scores: Sequence[tuple[float, float]]) -> float:
    """Sum of score*weight over sum of weights."""
    if any(w < 0 for _, w in scores):
        raise InputError("weights must be >= 0")
    total_weight = sum(w for _, w in scores)
    if total_weight == 0:
        raise InputError("weights must not all be zero")
    return sum(f * w for f, w in scores) / total_weight


def macro_average(values: Sequence[float]) -> float:
    """Unweighted arithmetic mean."""
    if not values:
        raise InputError("macro_average needs at least one value")
    return sum(values) / len(values)


def corpus_prf(
    docs: Sequence[tuple[Sequence[Annotation], Sequence[Annotation]]],
    mode: Literal["exact", "overlap"] = "exact",
    theta: float = 0.5,
) -> dict[TargetType, PrfScore]:
    """Per-type PRF pooled over (pred, gold) document pairs."""
    tp: dict[TargetType, int] = defaultdict(int)
    n_pred: dict[TargetType, int] = defaultdict(int)
    n_gold: dict[TargetType, int] = defaultdict(int)
    seen: set[TargetType] = set()
    for pred, gold in docs:
        for type_ in TargetType:
            p = [a for a in pred if a.type is type_]
            g = [a for a in gold if a.type is type_]
            if not p and not g:
                continue
            seen.add(type_)
            tp[type_] += _count_true_positives(p, g, mode, theta)
            n_pred[type_] += len(p)
            n_gold[type_] += len(g)
    out: dict[TargetType, PrfScore] = {}
    for type_ in sorted(seen, key=lambda t: t.value):
        hits = tp[type_]
        p = hits / n_pred[type_] if n_pred[type_] else 0.0
        r = hits / n_gold[type_] if n_gold[type_] else 0.0
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        out[type_] = PrfScore(precision=p, recall=r, f1=f1, support=n_gold[type_])
    return out


def write_prf_report(scores: dict[TargetType, PrfScore], path: str) -> None:
    """Line-delimited report: one row per type plus a macro_f1 footer.

    Row keys in fixed order: type, precision, recall, f1, support,
    weighted_f1 (the type's support-weighted contribution to the corpus
    average; the column sums to the weighted-average F1).
    """
    total_support = sum(s.support for s in scores.values())
    with open(path, "w", encoding="utf-8") as fh:
        f1_values = []
        for type_ in sorted(scores, key=lambda t: t.value):
            s = scores[type_]
            weighted = s.f1 * s.support / total_support if total_support else 0.0
            row = {
                "type": type_.value,
                "precision": round(s.precision, 6),
                "recall": round(s.recall, 6),
                "f1": round(s.f1, 6),
                "support": s.support,
                "weighted_f1": round(weighted, 6),
            }
            f1_values.append(s.f1)
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
        footer = {"macro_f1": round(macro_average(f1_values), 6)} if f1_values else {"macro_f1": 0.0}
        fh.write(json.dumps(footer) + "\n")
