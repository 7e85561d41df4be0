import itertools
import json
import random

import pytest

from prospect_dss.documents import Annotation, Document, TargetType
from prospect_dss.evaluation import (
    InputError,
    PrfScore,
    corpus_prf,
    iaa_report,
    iou,
    macro_average,
    match_annotations,
    prf,
    weighted_average,
    write_prf_report,
)
from prospect_dss.oracles import oracle_iou

CUR = TargetType.CURRENCY


def ann(*fragments, type_=CUR, annotator=None):
    return Annotation(type=type_, fragments=tuple(fragments), source="human",
                      confidence=1.0, annotator_id=annotator)


def random_fragments(rng, max_span=60):
    fragments = []
    pos = rng.randrange(0, 10)
    for _ in range(rng.randint(1, 4)):
        start = pos + rng.randrange(0, 6)
        end = start + rng.randint(1, 8)
        fragments.append((start, end))
        pos = end + 1 + rng.randrange(0, 4)
        if pos > max_span:
            break
    return tuple(fragments)


class TestIou:
    def test_identical(self):
        a = ann((3, 9))
        assert iou(a, ann((3, 9))) == 1.0

    def test_partial(self):
        assert iou(ann((0, 10)), ann((5, 15))) == pytest.approx(5 / 15)

    def test_discontinuous(self):
        a = ann((0, 5), (10, 15))
        b = ann((0, 15))
        assert iou(a, b) == pytest.approx(10 / 15)

    def test_symmetry_and_axioms(self):
        rng = random.Random(13)
        for _ in range(300):
            a = ann(*random_fragments(rng))
            b = ann(*random_fragments(rng))
            ab = iou(a, b)
            assert ab == iou(b, a)
            assert 0.0 <= ab <= 1.0
            assert ab == pytest.approx(oracle_iou(a, b), abs=1e-12)
        far = ann((1000, 1004))
        assert iou(ann((0, 4)), far) == 0.0

    def test_hull_mode(self):
        a = ann((0, 5), (10, 15))
        b = ann((0, 15))
        assert iou(a, b, mode="hull") == 1.0  # hulls coincide

    def test_fragment_order_irrelevant(self):
        # fragmentation of the same character set never changes the value
        a = ann((0, 5), (5, 10))
        b = ann((0, 10))
        assert iou(a, b) == 1.0


class TestMatchAnnotations:
    def test_identical_singletons(self):
        result = match_annotations([ann((0, 5))], [ann((0, 5))])
        assert len(result.pairs) == 1
        assert result.pairs[0][2] == 1.0
        assert not result.unmatched_a and not result.unmatched_b

    def test_disjoint(self):
        result = match_annotations([ann((0, 5))], [ann((10, 15))])
        assert result.pairs == []
        assert len(result.unmatched_a) == len(result.unmatched_b) == 1

    def test_crossing_overlaps_greedy(self):
        # a0 overlaps b0 strongly and b1 weakly; a1 overlaps b0 weakly
        a0, a1 = ann((0, 10)), ann((8, 12))
        b0, b1 = ann((0, 9)), ann((9, 20))
        result = match_annotations([a0, a1], [b0, b1])
        matched = {(id(x), id(y)) for x, y, _ in result.pairs}
        assert (id(a0), id(b0)) in matched  # highest IoU pair taken first
        assert (id(a1), id(b1)) in matched

    def test_greedy_vs_optimal_assignment(self):
        rng = random.Random(37)
        worse = 0
        for _ in range(200):
            side_a = [ann(*random_fragments(rng)) for _ in range(rng.randint(1, 4))]
            side_b = [ann(*random_fragments(rng)) for _ in range(rng.randint(1, 4))]
            result = match_annotations(side_a, side_b)
            greedy_total = sum(score for _, _, score in result.pairs)
            # exhaustive optimal one-to-one assignment
            best = 0.0
            indices_b = range(len(side_b))
            for k in range(0, min(len(side_a), len(side_b)) + 1):
                for subset_a in itertools.permutations(range(len(side_a)), k):
                    for subset_b in itertools.permutations(indices_b, k):
                        total = sum(
                            iou(side_a[i], side_b[j])
                            for i, j in zip(subset_a, subset_b)
                        )
                        best = max(best, total)
            assert greedy_total <= best + 1e-12
            if greedy_total < best - 1e-12:
                worse += 1
        # greedy is near-optimal in practice; differences are surfaced, not hidden
        assert worse <= 20


class TestIaaReport:
    def _doc(self, doc_id, annotations):
        return Document(id=doc_id, text="x" * 200, annotations=tuple(annotations))

    def test_perfect_duplicate(self):
        docs = [
            self._doc("d1", [
                ann((0, 5), annotator="a1"), ann((0, 5), annotator="a2"),
                ann((10, 20), type_=TargetType.ISIN, annotator="a1"),
                ann((10, 20), type_=TargetType.ISIN, annotator="a2"),
            ])
        ]
        report = iaa_report(docs)
        assert report.annotator_pair == ("a1", "a2")
        assert report.per_type[CUR] == 1.0
        assert report.per_type[TargetType.ISIN] == 1.0

    def test_one_annotator_empty(self):
        docs = [self._doc("d1", [ann((0, 5), annotator="a1")])]
        report = iaa_report(docs, annotators=("a1", "a2"))
        assert report.per_type[CUR] == 0.0

    def test_wrong_annotator_count_raises(self):
        docs = [self._doc("d-bad", [
            ann((0, 5), annotator="a1"), ann((0, 5), annotator="a2"),
            ann((1, 4), annotator="a3"),
        ])]
        with pytest.raises(InputError) as err:
            iaa_report(docs)
        assert "d-bad" in str(err.value)

    def test_hand_computed_three_document_fixture(self):
        # spreadsheet oracle:
        # doc1: pair IoU 1.0; doc2: pair IoU 5/15, one unmatched (a1) -> 0;
        # doc3: pair IoU 0.5
        # currency: (1.0 + 1/3 + 0 + 0.5) / 4 units = 0.4583333...
        docs = [
            self._doc("d1", [ann((0, 5), annotator="a1"), ann((0, 5), annotator="a2")]),
            self._doc("d2", [
                ann((0, 10), annotator="a1"), ann((5, 15), annotator="a2"),
                ann((50, 60), annotator="a1"),
            ]),
            self._doc("d3", [ann((0, 4), annotator="a1"), ann((0, 8), annotator="a2")]),
        ]
        report = iaa_report(docs)
        expected = (1.0 + 5 / 15 + 0.0 + 0.5) / 4
        assert report.per_type[CUR] == pytest.approx(expected)

    def test_committed_iaa_fixture_loads(self):
        from tests.conftest import IAA_DIR
        from prospect_dss.documents import load_document

        docs = [load_document(f.read_text("utf-8")) for f in sorted(IAA_DIR.glob("*.json"))]
        report = iaa_report(docs, annotators=("a1", "a2"))
        assert report.per_type
        assert all(0.0 <= v <= 1.0 for v in report.per_type.values())


class TestPrf:
    def test_perfect(self):
        gold = [ann((0, 5)), ann((10, 12))]
        score = prf(gold, gold)
        assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)

    def test_worked_example(self):
        gold = [ann((0, 5)), ann((10, 15)), ann((20, 25)), ann((30, 35))]
        pred = [ann((0, 5)), ann((10, 15)), ann((40, 45))]
        score = prf(pred, gold)
        assert score.precision == pytest.approx(0.667, abs=1e-3)
        assert score.recall == pytest.approx(0.5, abs=1e-3)
        assert score.f1 == pytest.approx(0.571, abs=1e-3)
        assert score.support == 4

    def test_empty_pred(self):
        score = prf([], [ann((0, 5))])
        assert (score.precision, score.recall, score.f1) == (0.0, 0.0, 0.0)

    def test_both_empty(self):
        score = prf([], [])
        assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)
        assert score.support == 0

    def test_permutation_invariance(self):
        rng = random.Random(41)
        gold = [ann(*random_fragments(rng)) for _ in range(5)]
        pred = [ann(*random_fragments(rng)) for _ in range(5)] + gold[:2]
        base = prf(pred, gold)
        for _ in range(10):
            shuffled_pred = pred[:]
            shuffled_gold = gold[:]
            rng.shuffle(shuffled_pred)
            rng.shuffle(shuffled_gold)
            assert prf(shuffled_pred, shuffled_gold) == base

    def test_overlap_mode(self):
        gold = [ann((0, 10))]
        pred = [ann((0, 6))]  # IoU 0.6
        assert prf(pred, gold, mode="overlap", theta=0.5).f1 == 1.0
        assert prf(pred, gold, mode="overlap", theta=0.7).f1 == 0.0

    def test_overlap_theta_one_equals_exact_for_aligned_fragments(self):
        rng = random.Random(43)
        for _ in range(50):
            gold = [ann(*random_fragments(rng)) for _ in range(rng.randint(0, 4))]
            pred = [ann(*random_fragments(rng)) for _ in range(rng.randint(0, 4))]
            exact = prf(pred, gold)
            at_one = prf(pred, gold, mode="overlap", theta=1.0)
            assert exact.precision == at_one.precision
            assert exact.recall == at_one.recall


class TestAggregation:
    def test_weighted_average(self):
        assert weighted_average([(0.8, 10), (0.6, 5)]) == pytest.approx(0.7333333)

    def test_single_entry(self):
        assert weighted_average([(0.42, 3)]) == pytest.approx(0.42)

    def test_equal_weights_is_macro(self):
        values = [0.2, 0.5, 0.8, 0.3]
        assert weighted_average([(v, 7) for v in values]) == pytest.approx(macro_average(values))

    def test_zero_weights_rejected(self):
        with pytest.raises(InputError):
            weighted_average([(0.5, 0), (0.6, 0)])

    def test_negative_weight_rejected(self):
        with pytest.raises(InputError):
            weighted_average([(0.5, -1)])

    def test_macro_all_equal(self):
        assert macro_average([0.7, 0.7, 0.7]) == pytest.approx(0.7)

    def test_macro_empty_rejected(self):
        with pytest.raises(InputError):
            macro_average([])


class TestReport:
    def test_rows_and_footer(self, tmp_path):
        scores = {
            CUR: PrfScore(precision=1.0, recall=0.5, f1=2 / 3, support=10),
            TargetType.ISIN: PrfScore(precision=0.5, recall=0.5, f1=0.5, support=30),
        }
        path = tmp_path / "report.jsonl"
        write_prf_report(scores, str(path))
        lines = [json.loads(line) for line in path.read_text().splitlines()]
        assert list(lines[0]) == ["type", "precision", "recall", "f1", "support", "weighted_f1"]
        assert lines[0]["type"] == "currency"
        assert lines[1]["type"] == "isin"
        weighted = sum(row["weighted_f1"] for row in lines[:-1])
        assert weighted == pytest.approx((2 / 3 * 10 + 0.5 * 30) / 40, abs=1e-5)
        assert lines[-1] == {"macro_f1": round((2 / 3 + 0.5) / 2, 6)}

    def test_corpus_prf_pools_counts(self):
        gold_a = [ann((0, 5))]
        gold_b = [ann((0, 5)), ann((10, 15))]
        pred_a = [ann((0, 5))]
        pred_b = [ann((0, 5)), ann((20, 25))]
        scores = corpus_prf([(pred_a, gold_a), (pred_b, gold_b)])
        assert scores[CUR].precision == pytest.approx(2 / 3)
        assert scores[CUR].recall == pytest.approx(2 / 3)
        assert scores[CUR].support == 3
