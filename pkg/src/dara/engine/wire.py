"""Minimal W3C WebDriver client over HTTP.

Speaks the standard wire protocol (new session, navigate, find element,
click, send keys, get url, cookies, delete session), so any conformant
control server works: chromedriver, geckodriver, or the bundled
`dara.minidriver` stub. One workflow run owns one session at a time.
"""

from __future__ import annotations

import logging
from typing import Any

import requests

from ..errors import NavigationFailed, ProtocolError, SessionLost

logger = logging.getLogger(__name__)

W3C_ELEMENT_KEY = "element-6066-11e4-a52e-4f735466cecf"
LEGACY_ELEMENT_KEY = "ELEMENT"

_STRATEGY_TO_USING = {"xpath": "xpath", "css": "css selector"}

DEFAULT_PAGE_TIMEOUT_MS = 30_000
DEFAULT_ELEMENT_TIMEOUT_MS = 10_000


class BrowserSession:
    """One browser-control session against a remote endpoint."""

    def __init__(
        self,
        remote_endpoint: str,
        *,
        page_timeout_ms: int = DEFAULT_PAGE_TIMEOUT_MS,
        element_timeout_ms: int = DEFAULT_ELEMENT_TIMEOUT_MS,
    ):
        self.remote_endpoint = remote_endpoint.rstrip("/")
        self.page_timeout_ms = page_timeout_ms
        self.element_timeout_ms = element_timeout_ms
        self.session_id: str | None = None
        self._http = requests.Session()

    # -- low-level request plumbing --

    def _request(self, method: str, path: str, body: dict | None = None, *, timeout_s: float | None = None) -> Any:
        url = f"{self.remote_endpoint}{path}"
        if timeout_s is None:
            timeout_s = self.page_timeout_ms / 1000 + 10
        try:
            resp = self._http.request(method, url, json=body, timeout=timeout_s)
        except requests.exceptions.RequestException as exc:
            raise SessionLost(f"browser-control server unreachable: {exc}") from exc
        try:
            payload = resp.json()
        except ValueError as exc:
            raise ProtocolError(f"non-JSON response for {method} {path}") from exc
        if not isinstance(payload, dict) or "value" not in payload:
            raise ProtocolError(f"malformed response for {method} {path}: {payload!r}")
        if resp.status_code >= 400:
            value = payload["value"] or {}
            error = value.get("error", "unknown error") if isinstance(value, dict) else "unknown error"
            message = value.get("message", "") if isinstance(value, dict) else ""
            return _WireError(resp.status_code, error, message)
        return payload["value"]

    def _command(self, method: str, tail: str, body: dict | None = None, **kw) -> Any:
        if self.session_id is None:
            raise SessionLost("no active session")
        return self._request(method, f"/session/{self.session_id}{tail}", body, **kw)

    # -- session lifecycle --

    def open(self) -> str:
        value = self._request(
            "POST",
            "/session",
            {
                "capabilities": {
                    "alwaysMatch": {"timeouts": {"pageLoad": self.page_timeout_ms}}
                }
            },
        )
        if isinstance(value, _WireError):
            raise SessionLost(f"could not create session: {value.error} {value.message}")
        session_id = value.get("sessionId") if isinstance(value, dict) else None
        if not session_id:
            raise ProtocolError(f"new-session response lacks sessionId: {value!r}")
        self.session_id = session_id
        logger.debug("opened browser session %s at %s", session_id, self.remote_endpoint)
        return session_id

    def quit(self) -> None:
        if self.session_id is None:
            return
        try:
            self._command("DELETE", "")
        except SessionLost:
            pass
        self.session_id = None

    def close_window(self) -> None:
        result = self._command("DELETE", "/window")
        if isinstance(result, _WireError):
            logger.debug("close window: %s", result.error)

    # -- navigation --

    def navigate(self, url: str) -> None:
        try:
            result = self._command("POST", "/url", {"url": url})
        except SessionLost as exc:
            # Session state is unknown after a dropped navigate; surface as a
            # navigation failure so the caller can emit a precise error.
            raise NavigationFailed(url, str(exc)) from exc
        if isinstance(result, _WireError):
            raise NavigationFailed(url, f"{result.error}: {result.message}")

    def current_url(self) -> str:
        result = self._command("GET", "/url")
        if isinstance(result, _WireError):
            raise ProtocolError(f"could not read current url: {result.error}")
        return str(result)

    # -- elements --

    def find_element(self, strategy: str, expression: str, *, root: str | None = None) -> str | None:
        using = _STRATEGY_TO_USING.get(strategy)
        if using is None:
            raise ProtocolError(f"unsupported selector strategy {strategy!r}")
        tail = f"/element/{root}/element" if root else "/element"
        result = self._command("POST", tail, {"using": using, "value": expression})
        if isinstance(result, _WireError):
            if result.error == "no such element":
                return None
            raise ProtocolError(f"find element failed: {result.error}: {result.message}")
        if isinstance(result, dict):
            eid = result.get(W3C_ELEMENT_KEY) or result.get(LEGACY_ELEMENT_KEY)
            if eid:
                return str(eid)
        raise ProtocolError(f"malformed element reference: {result!r}")

    def click(self, element_id: str) -> None:
        result = self._command("POST", f"/element/{element_id}/click", {})
        if isinstance(result, _WireError):
            raise _StepFailure(f"click failed: {result.error}: {result.message}")

    def clear(self, element_id: str) -> None:
        result = self._command("POST", f"/element/{element_id}/clear", {})
        if isinstance(result, _WireError):
            raise _StepFailure(f"clear failed: {result.error}")

    def send_keys(self, element_id: str, text: str) -> None:
        result = self._command("POST", f"/element/{element_id}/value", {"text": text})
        if isinstance(result, _WireError):
            raise _StepFailure(f"send keys failed: {result.error}")

    def element_property(self, element_id: str, name: str) -> Any:
        result = self._command("GET", f"/element/{element_id}/property/{name}")
        if isinstance(result, _WireError):
            raise _StepFailure(f"read property failed: {result.error}")
        return result

    # -- cookies --

    def add_cookie(self, name: str, value: str, *, domain: str | None = None, path: str = "/") -> None:
        cookie: dict[str, Any] = {"name": name, "value": value, "path": path}
        if domain:
            cookie["domain"] = domain
        result = self._command("POST", "/cookie", {"cookie": cookie})
        if isinstance(result, _WireError):
            raise ProtocolError(f"add cookie failed: {result.error}")


class _WireError:
    """Error payload from the control server, kept out of the exception flow
    so callers can map specific protocol errors (e.g. "no such element")."""

    def __init__(self, status: int, error: str, message: str):
        self.status = status
        self.error = error
        self.message = message


class _StepFailure(Exception):
    """Internal: a browser action was rejected; maps to a failed step outcome."""
