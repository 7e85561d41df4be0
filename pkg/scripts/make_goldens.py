"""Regenerate the golden predict responses for the committed fixture corpus.

Run from the repository root after intentionally changing the baseline rules,
the default config, or the response schema:

    python scripts/make_goldens.py

Goldens are the canonical (sorted-keys) JSON of each /v1/predict response
with the volatile timings field removed. Review the diff before committing.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path

from prospect_dss.detection import BaselineBackend
from prospect_dss.documents import document_to_dict, load_document
from prospect_dss.service import Controller, create_app
from prospect_dss.store import DocumentStore

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "fixtures" / "corpus"
GOLDEN = ROOT / "fixtures" / "golden"


def canonical_response(payload: dict) -> str:
    payload = dict(payload)
    payload.pop("timings", None)
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def main() -> None:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

        client = TestClient(create_app(Controller(DocumentStore(), BaselineBackend())))
    GOLDEN.mkdir(parents=True, exist_ok=True)
    for file in sorted(CORPUS.glob("*.json")):
        doc = load_document(file.read_text("utf-8"))
        record = document_to_dict(doc.with_annotations(()))
        response = client.post("/v1/predict", json=record)
        response.raise_for_status()
        out = GOLDEN / f"{doc.id}.predict.json"
        out.write_text(canonical_response(response.json()), encoding="utf-8")
        print(f"{doc.id}: {response.json()['verdict']['overall']}")


if __name__ == "__main__":
    main()
