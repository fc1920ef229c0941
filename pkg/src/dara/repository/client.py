"""Thin requests client for the process repository API."""

from __future__ import annotations

import requests

from ..document import DarpalDocument, parse_document, serialize_document
from ..errors import DaraError


class RepositoryUnreachable(DaraError):
    pass


class RepositoryError(DaraError):
    def __init__(self, status: int, code: str, detail: str):
        super().__init__(f"repository error {status} ({code}): {detail}")
        self.status = status
        self.code = code
        self.detail = detail


class RepositoryClient:
    def __init__(self, base_url: str, *, timeout_s: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self._http = requests.Session()

    def _request(self, method: str, path: str, **kw) -> requests.Response:
        try:
            resp = self._http.request(method, f"{self.base_url}{path}", timeout=self.timeout_s, **kw)
        except requests.exceptions.RequestException as exc:
            raise RepositoryUnreachable(f"repository at {self.base_url} unreachable: {exc}") from exc
        if resp.status_code >= 400:
            try:
                payload = resp.json()
            except ValueError:
                payload = {}
            raise RepositoryError(
                resp.status_code,
                payload.get("error", "unknown"),
                payload.get("detail", resp.text[:200]),
            )
        return resp

    def list_providers(self) -> list[dict]:
        return self._request("GET", "/providers").json()

    def get_document(self, provider: str) -> DarpalDocument:
        return parse_document(self._request("GET", f"/providers/{provider}").text)

    def put_document(self, provider: str, doc: DarpalDocument) -> dict:
        return self._request(
            "POST",
            f"/providers/{provider}",
            data=serialize_document(doc, pretty=False).encode("utf-8"),
            headers={"Content-Type": "application/json; charset=utf-8"},
        ).json()

    def delete_document(self, provider: str) -> None:
        self._request("DELETE", f"/providers/{provider}")

    def post_report(self, provider: str, outcome: str, engine_version: str) -> dict:
        return self._request(
            "POST",
            f"/providers/{provider}/reports",
            json={"outcome": outcome, "engineVersion": engine_version},
        ).json()

    def report_summary(self, provider: str) -> dict:
        return self._request("GET", f"/providers/{provider}/reports/summary").json()
