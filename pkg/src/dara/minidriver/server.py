"""HTTP server exposing the micro-browser over the W3C WebDriver wire protocol.

Implements the command subset the workflow engine uses: session lifecycle,
navigation, element finding (xpath / css selector), click, send keys, clear,
property reads, cookies, and window close.
"""

from __future__ import annotations

import json
import logging
import re
import threading
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..errors import PortInUse
from .browser import MicroBrowser, NavigationError, StaleElement
from .dom import SelectorSyntaxError

logger = logging.getLogger(__name__)

_ROUTES: list[tuple[str, re.Pattern[str], str]] = [
    ("POST", re.compile(r"^/session$"), "new_session"),
    ("DELETE", re.compile(r"^/session/(?P<sid>[^/]+)$"), "delete_session"),
    ("POST", re.compile(r"^/session/(?P<sid>[^/]+)/url$"), "navigate"),
    ("GET", re.compile(r"^/session/(?P<sid>[^/]+)/url$"), "get_url"),
    ("POST", re.compile(r"^/session/(?P<sid>[^/]+)/element$"), "find_element"),
    ("POST", re.compile(r"^/session/(?P<sid>[^/]+)/element/(?P<eid>[^/]+)/element$"), "find_from_element"),
    ("POST", re.compile(r"^/session/(?P<sid>[^/]+)/element/(?P<eid>[^/]+)/click$"), "click"),
    ("POST", re.compile(r"^/session/(?P<sid>[^/]+)/element/(?P<eid>[^/]+)/value$"), "send_keys"),
    ("POST", re.compile(r"^/session/(?P<sid>[^/]+)/element/(?P<eid>[^/]+)/clear$"), "clear"),
    ("GET", re.compile(r"^/session/(?P<sid>[^/]+)/element/(?P<eid>[^/]+)/property/(?P<name>[^/]+)$"), "get_property"),
    ("GET", re.compile(r"^/session/(?P<sid>[^/]+)/element/(?P<eid>[^/]+)/text$"), "get_text"),
    ("POST", re.compile(r"^/session/(?P<sid>[^/]+)/cookie$"), "add_cookie"),
    ("DELETE", re.compile(r"^/session/(?P<sid>[^/]+)/window$"), "close_window"),
    ("GET", re.compile(r"^/status$"), "status"),
]

ELEMENT_KEY = "element-6066-11e4-a52e-4f735466cecf"


class _Sessions:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._browsers: dict[str, MicroBrowser] = {}

    def create(self, page_load_timeout_ms: int) -> str:
        sid = uuid.uuid4().hex
        with self._lock:
            self._browsers[sid] = MicroBrowser(page_load_timeout_ms=page_load_timeout_ms)
        return sid

    def get(self, sid: str) -> MicroBrowser | None:
        with self._lock:
            return self._browsers.get(sid)

    def drop(self, sid: str) -> bool:
        with self._lock:
            return self._browsers.pop(sid, None) is not None


class _Handler(BaseHTTPRequestHandler):
    server_version = "dara-minidriver/1"
    sessions: _Sessions  # set on the server class

    # quieter than the default stderr-per-request logging
    def log_message(self, fmt: str, *args) -> None:
        logger.debug("minidriver: " + fmt, *args)

    def _reply(self, status: int, value) -> None:
        body = json.dumps({"value": value}).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, error: str, message: str = "") -> None:
        self._reply(status, {"error": error, "message": message, "stacktrace": ""})

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if not length:
            return {}
        try:
            return json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            return {}

    def _dispatch(self, method: str) -> None:
        for verb, pattern, name in _ROUTES:
            if verb != method:
                continue
            match = pattern.match(self.path)
            if match:
                try:
                    getattr(self, f"cmd_{name}")(**match.groupdict())
                except StaleElement:
                    self._error(404, "stale element reference", "element is no longer attached")
                except NavigationError as exc:
                    self._error(500, "unknown error", str(exc))
                except SelectorSyntaxError as exc:
                    self._error(400, "invalid selector", str(exc))
                except BrokenPipeError:
                    raise
                except Exception as exc:  # keep the server alive
                    logger.exception("minidriver command failed")
                    self._error(500, "unknown error", str(exc))
                return
        self._error(404, "unknown command", f"{method} {self.path}")

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")

    def do_DELETE(self) -> None:
        self._dispatch("DELETE")

    # -- command implementations --

    def _browser(self, sid: str) -> MicroBrowser | None:
        browser = self.sessions.get(sid)
        if browser is None:
            self._error(404, "invalid session id", sid)
        return browser

    def cmd_status(self) -> None:
        self._reply(200, {"ready": True, "message": "dara minidriver"})

    def cmd_new_session(self) -> None:
        body = self._body()
        always_match = body.get("capabilities", {}).get("alwaysMatch", {})
        timeouts = always_match.get("timeouts", {}) if isinstance(always_match, dict) else {}
        page_load = timeouts.get("pageLoad", 30_000)
        sid = self.sessions.create(int(page_load))
        self._reply(
            200,
            {
                "sessionId": sid,
                "capabilities": {"browserName": "dara-minidriver", "timeouts": {"pageLoad": page_load}},
            },
        )

    def cmd_delete_session(self, sid: str) -> None:
        if self.sessions.drop(sid):
            self._reply(200, None)
        else:
            self._error(404, "invalid session id", sid)

    def cmd_navigate(self, sid: str) -> None:
        browser = self._browser(sid)
        if browser is None:
            return
        url = self._body().get("url")
        if not isinstance(url, str) or not url:
            self._error(400, "invalid argument", "missing url")
            return
        try:
            browser.navigate(url)
        except NavigationError as exc:
            self._error(500, "timeout" if "timed out" in str(exc) else "unknown error", str(exc))
            return
        self._reply(200, None)

    def cmd_get_url(self, sid: str) -> None:
        browser = self._browser(sid)
        if browser is not None:
            self._reply(200, browser.current_url)

    def _find(self, sid: str, root_id: str | None) -> None:
        browser = self._browser(sid)
        if browser is None:
            return
        body = self._body()
        using, value = body.get("using"), body.get("value")
        if not isinstance(using, str) or not isinstance(value, str):
            self._error(400, "invalid argument", "missing using/value")
            return
        element_id = browser.find(using, value, root_id)
        if element_id is None:
            self._error(404, "no such element", f"{using} {value!r} matched nothing")
        else:
            self._reply(200, {ELEMENT_KEY: element_id})

    def cmd_find_element(self, sid: str) -> None:
        self._find(sid, None)

    def cmd_find_from_element(self, sid: str, eid: str) -> None:
        self._find(sid, eid)

    def cmd_click(self, sid: str, eid: str) -> None:
        browser = self._browser(sid)
        if browser is None:
            return
        browser.click(eid)
        self._reply(200, None)

    def cmd_send_keys(self, sid: str, eid: str) -> None:
        browser = self._browser(sid)
        if browser is None:
            return
        text = self._body().get("text", "")
        browser.send_keys(eid, str(text))
        self._reply(200, None)

    def cmd_clear(self, sid: str, eid: str) -> None:
        browser = self._browser(sid)
        if browser is None:
            return
        browser.clear(eid)
        self._reply(200, None)

    def cmd_get_property(self, sid: str, eid: str, name: str) -> None:
        browser = self._browser(sid)
        if browser is None:
            return
        self._reply(200, browser.property_value(eid, name))

    def cmd_get_text(self, sid: str, eid: str) -> None:
        browser = self._browser(sid)
        if browser is None:
            return
        self._reply(200, browser.text(eid))

    def cmd_add_cookie(self, sid: str) -> None:
        browser = self._browser(sid)
        if browser is None:
            return
        cookie = self._body().get("cookie")
        if not isinstance(cookie, dict) or "name" not in cookie or "value" not in cookie:
            self._error(400, "invalid argument", "cookie needs name and value")
            return
        domain = cookie.get("domain")
        if not domain:
            from urllib.parse import urlsplit

            domain = urlsplit(browser.current_url).netloc
        if not domain:
            self._error(400, "invalid argument", "no domain and no current page")
            return
        browser.add_cookie(str(cookie["name"]), str(cookie["value"]), str(domain))
        self._reply(200, None)

    def cmd_close_window(self, sid: str) -> None:
        browser = self._browser(sid)
        if browser is None:
            return
        browser.close_page()
        self._reply(200, [])


class MinidriverHandle:
    def __init__(self, server: ThreadingHTTPServer, thread: threading.Thread):
        self._server = server
        self._thread = thread
        self.port = server.server_address[1]
        self.url = f"http://127.0.0.1:{self.port}"

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)


def serve(port: int = 0, host: str = "127.0.0.1") -> MinidriverHandle:
    """Start the control server on `port` (0 picks a free one)."""
    sessions = _Sessions()
    handler = type("BoundHandler", (_Handler,), {"sessions": sessions})
    try:
        server = ThreadingHTTPServer((host, port), handler)
    except OSError as exc:
        if exc.errno == 98:  # EADDRINUSE
            raise PortInUse(port) from exc
        raise
    server.daemon_threads = True
    thread = threading.Thread(target=server.serve_forever, name="dara-minidriver", daemon=True)
    thread.start()
    logger.info("minidriver listening on %s:%s", host, server.server_address[1])
    return MinidriverHandle(server, thread)
