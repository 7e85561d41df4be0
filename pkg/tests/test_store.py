import pytest

from prospect_dss.documents import Annotation, TargetType
from prospect_dss.store import (
    DocumentStore,
    FeedbackAction,
    FeedbackRecord,
    UnknownDocument,
    feedback_from_dict,
    feedback_to_dict,
)


def currency_ann(start=20, end=24, confidence=1.0, source="baseline"):
    return Annotation(type=TargetType.CURRENCY, fragments=((start, end),),
                      source=source, confidence=confidence)


def record(doc_id, annotations, reviewer="rev1", ts="2026-01-01T00:00:00+00:00", actions=()):
    return FeedbackRecord(
        document_id=doc_id, reviewer_id=reviewer,
        actions=tuple(actions), annotations=tuple(annotations), timestamp=ts,
    )


class TestBaseRecords:
    def test_put_get(self, corpus_docs):
        store = DocumentStore()
        store.put_document(corpus_docs[0])
        assert store.get_document(corpus_docs[0].id) == corpus_docs[0]

    def test_unknown(self):
        store = DocumentStore()
        with pytest.raises(UnknownDocument):
            store.get_document("nope")

    def test_document_ids_sorted(self, corpus_docs):
        store = DocumentStore()
        for doc in reversed(corpus_docs):
            store.put_document(doc)
        assert store.document_ids() == sorted(d.id for d in corpus_docs)


class TestFeedback:
    def test_confirm_all_keeps_annotations(self, corpus_docs):
        doc = corpus_docs[0]
        store = DocumentStore()
        store.put_document(doc)
        store.append_feedback(record(doc.id, doc.annotations,
                                     actions=[FeedbackAction("confirmed", doc.annotations[0])]))
        assert store.get_document(doc.id).annotations == doc.annotations
        assert store.export_eligible_ids() == [doc.id]

    def test_edit_reflected(self, corpus_docs):
        doc = corpus_docs[0]
        store = DocumentStore()
        store.put_document(doc)
        edited = (currency_ann(source="human"),)
        store.append_feedback(record(doc.id, edited))
        assert store.get_document(doc.id).annotations == edited

    def test_unknown_document(self):
        store = DocumentStore()
        with pytest.raises(UnknownDocument):
            store.append_feedback(record("ghost", ()))

    def test_invalid_resulting_set_rejected(self, corpus_docs):
        doc = corpus_docs[0]
        store = DocumentStore()
        store.put_document(doc)
        bad = (Annotation(type=TargetType.CURRENCY,
                          fragments=((0, len(doc.text) + 99),), source="human"),)
        with pytest.raises(ValueError):
            store.append_feedback(record(doc.id, bad))

    def test_unknown_action_rejected(self, corpus_docs):
        doc = corpus_docs[0]
        store = DocumentStore()
        store.put_document(doc)
        with pytest.raises(ValueError):
            store.append_feedback(
                record(doc.id, (), actions=[FeedbackAction("vetoed", currency_ann())])
            )

    def test_log_is_append_only(self, corpus_docs):
        doc = corpus_docs[0]
        store = DocumentStore()
        store.put_document(doc)
        first = record(doc.id, (currency_ann(),), ts="t1")
        second = record(doc.id, (), ts="t2")
        store.append_feedback(first)
        snapshot = store.feedback_log()
        store.append_feedback(second)
        assert store.feedback_log() == [first, second]
        assert snapshot == [first]  # earlier snapshot untouched

    def test_last_writer_wins(self, corpus_docs):
        doc = corpus_docs[0]
        store = DocumentStore()
        store.put_document(doc)
        store.append_feedback(record(doc.id, (currency_ann(),), ts="t1"))
        store.append_feedback(record(doc.id, (), ts="t2"))
        assert store.get_document(doc.id).annotations == ()

    def test_serialization_round_trip(self):
        rec = record("d1", (currency_ann(source="human"),),
                     actions=[FeedbackAction("added", currency_ann(source="human"))])
        assert feedback_from_dict(feedback_to_dict(rec)) == rec


class TestReplayAndPersistence:
    def test_replay_equals_current(self, corpus_docs):
        store = DocumentStore()
        for doc in corpus_docs[:3]:
            store.put_document(doc)
        store.append_feedback(record(corpus_docs[0].id, (currency_ann(),), ts="t1"))
        store.append_feedback(record(corpus_docs[1].id, (), ts="t2"))
        store.append_feedback(record(corpus_docs[0].id, corpus_docs[0].annotations, ts="t3"))
        assert store.replay() == store.current_state()

    def test_disk_round_trip(self, corpus_docs, tmp_path):
        path = tmp_path / "store"
        store = DocumentStore(path)
        for doc in corpus_docs[:2]:
            store.put_document(doc)
        store.append_feedback(record(corpus_docs[0].id, (currency_ann(),)))
        reopened = DocumentStore(path)
        assert reopened.current_state() == store.current_state()
        assert reopened.feedback_log() == store.feedback_log()
        assert reopened.replay() == store.current_state()

    def test_odd_document_ids_file_safe(self, tmp_path):
        from prospect_dss.documents import Document, baseline_tokenize

        text = "Währung: Euro"
        doc = Document(id="dir/../weird id?", text=text, tokens=baseline_tokenize(text))
        store = DocumentStore(tmp_path / "store")
        store.put_document(doc)
        reopened = DocumentStore(tmp_path / "store")
        assert reopened.get_document("dir/../weird id?").text == text


class TestExport:
    def test_empty_without_feedback(self, corpus_docs):
        store = DocumentStore()
        store.put_document(corpus_docs[0])
        assert list(store.export_training_data()) == []

    def test_matches_builder_output(self, corpus_docs):
        from prospect_dss.bio import build_training_examples, training_example_to_json

        doc = corpus_docs[0]
        store = DocumentStore()
        store.put_document(doc)
        store.append_feedback(record(doc.id, doc.annotations))
        expected = [
            training_example_to_json(e) for e in build_training_examples(doc)
        ]
        assert list(store.export_training_data()) == expected

    def test_reexport_identical(self, corpus_docs):
        store = DocumentStore()
        for doc in corpus_docs[:3]:
            store.put_document(doc)
            store.append_feedback(record(doc.id, doc.annotations))
        first = "\n".join(store.export_training_data())
        second = "\n".join(store.export_training_data())
        assert first == second
        assert first  # non-empty

    def test_ordered_by_document_id(self, corpus_docs):
        import json

        store = DocumentStore()
        for doc in reversed(corpus_docs[:3]):
            store.put_document(doc)
            store.append_feedback(record(doc.id, doc.annotations))
        ids = [json.loads(line)["doc_id"] for line in store.export_training_data()]
        assert ids == sorted(ids)
