"""Command line interface.

Commands that correspond to HTTP endpoints (ingest, predict, decide,
export-training) are thin clients: with --server they talk to a running
service, otherwise they drive an in-process instance of the same app backed
by the store at $PROSPECT_DSS_STORE (or --store). evaluate and
generate-fixtures are local computations.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import httpx

from . import STORE_ENV_VAR, __version__
from .decider import default_config, load_config
from .detection import BaselineBackend, CompositeBackend, RemoteBackend, RemoteModelConfig
from .documents import Document, load_document, dump_document
from .evaluation import corpus_prf, iaa_report, write_prf_report
from .fixtures import FixtureSpec, generate_corpus, generate_iaa_corpus
from .service import Controller, create_app
from .store import DocumentStore


def _build_backend(args):
    name = getattr(args, "backend", "baseline")
    if name == "baseline":
        return BaselineBackend()
    remote_cfg = RemoteModelConfig(
        endpoint=args.remote_endpoint, timeout=args.remote_timeout
    )
    if name == "remote":
        return RemoteBackend(remote_cfg)
    return CompositeBackend([BaselineBackend(), RemoteBackend(remote_cfg)])


def _build_controller(args) -> Controller:
    store_path = getattr(args, "store", None) or os.environ.get(STORE_ENV_VAR)
    config = load_config(args.config) if getattr(args, "config", None) else default_config()
    return Controller(
        store=DocumentStore(store_path), backend=_build_backend(args), config=config
    )


def _client(args) -> httpx.Client:
    if getattr(args, "server", None):
        return httpx.Client(base_url=args.server.rstrip("/"), timeout=60.0)
    import warnings

    with warnings.catch_warnings():
        # starlette's in-process client warns about its httpx dependency
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

        return TestClient(create_app(_build_controller(args)), base_url="http://local")


def _load_docs(path: str) -> list[Document]:
    p = Path(path)
    files = sorted(p.glob("*.json")) if p.is_dir() else [p]
    return [load_document(f.read_text("utf-8")) for f in files]


def _emit(payload: str, out: str | None) -> None:
    if out:
        Path(out).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload + ("" if payload.endswith("\n") else "\n"))


def _post_document(args, endpoint: str) -> int:
    with _client(args) as client:
        for doc in _load_docs(args.file):
            record = json.loads(dump_document(doc))
            response = client.post(endpoint, json=record)
            if response.status_code >= 400:
                sys.stderr.write(f"{doc.id}: HTTP {response.status_code} {response.text}\n")
                return 1
            _emit(json.dumps(response.json(), ensure_ascii=False, indent=2), args.out)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    app = create_app(_build_controller(args))
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_ingest(args) -> int:
    with _client(args) as client:
        for doc in _load_docs(args.file):
            record = json.loads(dump_document(doc))
            response = client.post("/v1/predict", json=record)
            if response.status_code >= 400:
                sys.stderr.write(f"{doc.id}: HTTP {response.status_code} {response.text}\n")
                return 1
            verdict = response.json()["verdict"]["overall"]
            print(f"{doc.id}: {verdict}")
    return 0


def cmd_predict(args) -> int:
    return _post_document(args, "/v1/predict")


def cmd_decide(args) -> int:
    return _post_document(args, "/v1/decide")


def cmd_export_training(args) -> int:
    with _client(args) as client:
        response = client.get("/v1/export/training")
        if response.status_code >= 400:
            sys.stderr.write(f"HTTP {response.status_code} {response.text}\n")
            return 1
        Path(args.out).write_text(response.text, encoding="utf-8")
        print(f"wrote {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    docs = _load_docs(args.corpus)
    if args.metric == "iaa":
        report = iaa_report(docs)
        rows = [
            {"type": type_.value, "iou": round(score, 6)}
            for type_, score in sorted(report.per_type.items(), key=lambda kv: kv[0].value)
        ]
        payload = "\n".join(json.dumps(r, ensure_ascii=False) for r in rows)
        _emit(payload, args.report)
        return 0
    backend = BaselineBackend()
    pairs = []
    for doc in docs:
        pred = backend.detect(doc.with_annotations(()))
        pairs.append((pred, doc.annotations))
    scores = corpus_prf(pairs, mode=args.mode, theta=args.theta)
    if args.report:
        write_prf_report(scores, args.report)
    for type_, s in scores.items():
        print(
            f"{type_.value}: P={s.precision:.3f} R={s.recall:.3f} "
            f"F1={s.f1:.3f} (support {s.support})"
        )
    return 0


def cmd_generate_fixtures(args) -> int:
    spec = FixtureSpec(seed=args.seed)
    docs = generate_iaa_corpus(spec) if args.iaa else generate_corpus(spec)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for doc in docs:
        (outdir / f"{doc.id}.json").write_text(dump_document(doc) + "\n", encoding="utf-8")
    print(f"wrote {len(docs)} documents to {outdir}")
    return 0


def _add_client_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--server", help="base URL of a running service; omit for in-process mode")
    parser.add_argument("--store", help=f"store path for in-process mode (default ${STORE_ENV_VAR})")
    parser.add_argument("--config", help="decider config JSON (default: shipped instance)")
    parser.add_argument("--backend", choices=("baseline", "remote", "both"), default="baseline")
    parser.add_argument("--remote-endpoint", default="http://localhost:9000/infer")
    parser.add_argument("--remote-timeout", type=float, default=10.0)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="prospect-dss", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    _add_client_args(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("ingest", help="store documents and print their verdicts")
    p.add_argument("file", help="document JSON file or directory")
    _add_client_args(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("predict", help="detect evidence and decide")
    p.add_argument("file")
    p.add_argument("--out")
    _add_client_args(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("decide", help="decide over the submitted annotations only")
    p.add_argument("file")
    p.add_argument("--out")
    _add_client_args(p)
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("export-training", help="download the training export")
    p.add_argument("out")
    _add_client_args(p)
    p.set_defaults(func=cmd_export_training)

    p = sub.add_parser("evaluate", help="corpus metrics")
    p.add_argument("metric", choices=("iaa", "prf"))
    p.add_argument("corpus", help="directory of document JSON files")
    p.add_argument("--report", help="write a line-delimited report here")
    p.add_argument("--mode", choices=("exact", "overlap"), default="exact")
    p.add_argument("--theta", type=float, default=0.5)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("generate-fixtures", help="write a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--iaa", action="store_true", help="dual-annotator variant")
    p.set_defaults(func=cmd_generate_fixtures)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
