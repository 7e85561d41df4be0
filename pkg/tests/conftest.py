import json
import warnings
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
CORPUS_DIR = REPO_ROOT / "fixtures" / "corpus"
IAA_DIR = REPO_ROOT / "fixtures" / "iaa"
GOLDEN_DIR = REPO_ROOT / "fixtures" / "golden"


def make_test_client(controller=None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    from prospect_dss.service import create_app

    return TestClient(create_app(controller))


@pytest.fixture(scope="session")
def corpus_docs():
    from prospect_dss.documents import load_document

    return [load_document(f.read_text("utf-8")) for f in sorted(CORPUS_DIR.glob("*.json"))]


@pytest.fixture(scope="session")
def golden_responses():
    return {
        f.name.removesuffix(".predict.json"): json.loads(f.read_text("utf-8"))
        for f in sorted(GOLDEN_DIR.glob("*.predict.json"))
    }


@pytest.fixture()
def client():
    from prospect_dss.detection import BaselineBackend
    from prospect_dss.service import Controller
    from prospect_dss.store import DocumentStore

    controller = Controller(store=DocumentStore(), backend=BaselineBackend())
    return make_test_client(controller)


def canonical_response(payload: dict) -> str:
    """Golden comparison form: sorted keys, volatile timings removed."""
    payload = dict(payload)
    payload.pop("timings", None)
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
