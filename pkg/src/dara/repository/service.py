"""HTTP/JSON API over the document store.

    GET    /providers                      sorted listing
    GET    /providers/{name}               exact stored document bytes
    POST   /providers/{name}               upsert, gated by version monotonicity
    DELETE /providers/{name}               remove document and history
    POST   /providers/{name}/reports       append an execution report
    GET    /providers/{name}/reports/summary  read-only outcome counts

Error bodies are `{"error": code, "detail": text, "findings"?: [...]}`. The
service carries no authentication; run it on localhost or behind your own
gateway, never on the open internet as-is.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from fastapi import FastAPI, Request, Response

from ..document import parse_document
from ..errors import DocumentSyntaxError, StructureError
from .store import (
    DocumentStore,
    HashMismatch,
    IntegrityError,
    NameMismatch,
    ProviderNotFound,
    ValidationFailed,
    VersionConflict,
)

logger = logging.getLogger(__name__)

JSON_UTF8 = "application/json; charset=utf-8"


def _error_response(status: int, code: str, detail: str, findings: list | None = None) -> Response:
    body: dict = {"error": code, "detail": detail}
    if findings is not None:
        body["findings"] = findings
    return Response(json.dumps(body, ensure_ascii=False), status_code=status, media_type=JSON_UTF8)


def _json_response(payload, status: int = 200) -> Response:
    return Response(json.dumps(payload, ensure_ascii=False), status_code=status, media_type=JSON_UTF8)


def create_app(store_dir: str | Path) -> FastAPI:
    store = DocumentStore(store_dir)
    app = FastAPI(title="dara process repository", version="1.0")
    app.state.store = store

    @app.exception_handler(ProviderNotFound)
    async def _not_found(_req: Request, exc: ProviderNotFound) -> Response:
        return _error_response(404, "not-found", str(exc))

    @app.exception_handler(IntegrityError)
    async def _integrity(_req: Request, exc: IntegrityError) -> Response:
        return _error_response(500, "integrity-failure", str(exc))

    @app.get("/providers")
    def list_providers() -> Response:
        return _json_response(store.list_providers())

    @app.get("/providers/{name}")
    def get_document(name: str) -> Response:
        _doc, raw = store.get_document(name)
        return Response(raw, media_type=JSON_UTF8)

    @app.post("/providers/{name}")
    async def put_document(name: str, request: Request) -> Response:
        raw = await request.body()
        try:
            doc = parse_document(raw)
        except (DocumentSyntaxError, StructureError) as exc:
            return _error_response(422, "validation-failed", str(exc))
        try:
            info = store.put_document(name, doc)
        except ValidationFailed as exc:
            findings = [
                {"path": f.path, "severity": f.severity, "message": f.message}
                for f in exc.report.findings
            ]
            return _error_response(422, "validation-failed", str(exc), findings)
        except HashMismatch as exc:
            return _error_response(422, "hash-mismatch", str(exc))
        except VersionConflict as exc:
            return _error_response(409, "version-conflict", str(exc))
        except NameMismatch as exc:
            return _error_response(400, "name-mismatch", str(exc))
        return _json_response(
            {"provider": info.provider, "version": info.version, "hash": info.hash},
            status=201 if info.created else 200,
        )

    @app.delete("/providers/{name}")
    def delete_document(name: str) -> Response:
        store.delete_document(name)
        return Response(status_code=204)

    @app.post("/providers/{name}/reports")
    async def post_report(name: str, request: Request) -> Response:
        try:
            payload = await request.json()
        except ValueError:
            return _error_response(422, "validation-failed", "body must be JSON")
        if not isinstance(payload, dict):
            return _error_response(422, "validation-failed", "body must be a JSON object")
        outcome = payload.get("outcome")
        try:
            entry = store.add_report(
                name,
                outcome=str(outcome),
                engine_version=str(payload.get("engineVersion", "unknown")),
                reported_at=payload.get("reportedAt"),
            )
        except ValueError as exc:
            return _error_response(422, "validation-failed", str(exc))
        return _json_response(entry, status=201)

    @app.get("/providers/{name}/reports/summary")
    def report_summary(name: str) -> Response:
        return _json_response(store.report_summary(name))

    return app
