"""Document persistence and the review feedback loop.

The store keeps an immutable base record per document (as submitted to
predict) plus an append-only feedback log. The current annotation state of a
document is a fold over that log: the latest feedback's resulting set wins.
Replaying the log from disk reconstructs the identical state.
"""

from __future__ import annotations

import json
import threading
import urllib.parse
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

from .bio import build_training_examples, training_example_to_json
from .documents import (
    Annotation,
    Document,
    annotation_from_dict,
    annotation_to_dict,
    document_from_dict,
    document_to_dict,
    validate_document,
)

FEEDBACK_ACTIONS = ("confirmed", "edited", "added", "deleted")


class UnknownDocument(KeyError):
    pass


@dataclass(frozen=True)
class FeedbackAction:
    action: str
    annotation: Annotation


@dataclass(frozen=True)
class FeedbackRecord:
    document_id: str
    reviewer_id: str
    actions: tuple[FeedbackAction, ...]
    annotations: tuple[Annotation, ...]  # resulting set after the review
    timestamp: str


def feedback_to_dict(record: FeedbackRecord) -> dict:
    return {
        "document_id": record.document_id,
        "reviewer_id": record.reviewer_id,
        "actions": [
            {"action": a.action, "annotation": annotation_to_dict(a.annotation)}
            for a in record.actions
        ],
        "annotations": [annotation_to_dict(a) for a in record.annotations],
        "timestamp": record.timestamp,
    }


def feedback_from_dict(d: dict) -> FeedbackRecord:
    return FeedbackRecord(
        document_id=d["document_id"],
        reviewer_id=d["reviewer_id"],
        actions=tuple(
            FeedbackAction(action=a["action"], annotation=annotation_from_dict(a["annotation"]))
            for a in d.get("actions", [])
        ),
        annotations=tuple(annotation_from_dict(a) for a in d.get("annotations", [])),
        timestamp=d["timestamp"],
    )


class DocumentStore:
    """Pluggable key-value document store with a file-backed default.

    With a path, base records live under documents/ and the feedback log in
    feedback.jsonl; without one, everything stays in memory. Writes for a
    single document are serialized; reads return immutable snapshots.
    """

    def __init__(self, path: Optional[str | Path] = None):
        self._path = Path(path) if path else None
        self._base: dict[str, Document] = {}
        self._log: list[FeedbackRecord] = []
        self._locks: defaultdict[str, threading.Lock] = defaultdict(threading.Lock)
        self._registry_lock = threading.Lock()
        if self._path:
            self._path.mkdir(parents=True, exist_ok=True)
            (self._path / "documents").mkdir(exist_ok=True)
            self._load()

    # -- loading / persistence ------------------------------------------------

    def _doc_file(self, doc_id: str) -> Path:
        assert self._path is not None
        return self._path / "documents" / (urllib.parse.quote(doc_id, safe="") + ".json")

    def _load(self) -> None:
        assert self._path is not None
        for file in sorted((self._path / "documents").glob("*.json")):
            doc = document_from_dict(json.loads(file.read_text("utf-8")))
            self._base[doc.id] = doc
        log_file = self._path / "feedback.jsonl"
        if log_file.exists():
            with log_file.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._log.append(feedback_from_dict(json.loads(line)))

    def _lock_for(self, doc_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks[doc_id]

    # -- base records ----------------------------------------------------------

    def put_document(self, doc: Document) -> None:
        with self._lock_for(doc.id):
            self._base[doc.id] = doc
            if self._path:
                self._doc_file(doc.id).write_text(
                    json.dumps(document_to_dict(doc), ensure_ascii=False, indent=2),
                    encoding="utf-8",
                )

    def has_document(self, doc_id: str) -> bool:
        return doc_id in self._base

    def get_document(self, doc_id: str) -> Document:
        """Current state: base record with the latest feedback's set applied."""
        base = self._base.get(doc_id)
        if base is None:
            raise UnknownDocument(doc_id)
        latest: Optional[FeedbackRecord] = None
        for record in self._log:
            if record.document_id == doc_id:
                latest = record
        if latest is None:
            return base
        return base.with_annotations(latest.annotations)

    def document_ids(self) -> list[str]:
        return sorted(self._base)

    # -- feedback --------------------------------------------------------------

    def append_feedback(self, record: FeedbackRecord) -> None:
        base = self._base.get(record.document_id)
        if base is None:
            raise UnknownDocument(record.document_id)
        for action in record.actions:
            if action.action not in FEEDBACK_ACTIONS:
                raise ValueError(f"unknown feedback action {action.action!r}")
        candidate = base.with_annotations(record.annotations)
        violations = validate_document(candidate)
        if violations:
            raise ValueError(
                f"feedback for {record.document_id} yields invalid annotations: {violations}"
            )
        with self._lock_for(record.document_id):
            self._log.append(record)
            if self._path:
                with (self._path / "feedback.jsonl").open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(feedback_to_dict(record), ensure_ascii=False) + "\n")

    def feedback_log(self, doc_id: Optional[str] = None) -> list[FeedbackRecord]:
        if doc_id is None:
            return list(self._log)
        return [r for r in self._log if r.document_id == doc_id]

    def export_eligible_ids(self) -> list[str]:
        """Documents with at least one review confirmation, ready for export."""
        flagged = {r.document_id for r in self._log}
        return sorted(doc_id for doc_id in flagged if doc_id in self._base)

    # -- invariants / export -----------------------------------------------------

    def current_state(self) -> dict[str, Document]:
        return {doc_id: self.get_document(doc_id) for doc_id in self.document_ids()}

    def replay(self) -> dict[str, Document]:
        """Recompute every document's state by folding the full log over the
        base records; equals current_state() by construction."""
        state = dict(self._base)
        for record in self._log:
            base = state.get(record.document_id)
            if base is not None:
                state[record.document_id] = base.with_annotations(record.annotations)
        return {doc_id: state[doc_id] for doc_id in sorted(state)}

    def export_training_data(
        self, max_seq_len: int = 256, stride: int = 64
    ) -> Iterator[str]:
        """Line-delimited training examples from confirmed annotation sets,
        ordered by document id; identical state yields identical bytes."""
        for doc_id in self.export_eligible_ids():
            doc = self.get_document(doc_id)
            for example in build_training_examples(doc, max_seq_len=max_seq_len, stride=stride):
                yield training_example_to_json(example)
