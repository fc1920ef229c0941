"""HTTP server for the sandbox provider.

Routes, per scenario: `/{name}/login`, `/{name}/privacy/dsar`,
`/{name}/submit`, `/{name}/confirm`. Received DSAR submissions land in an
inspectable journal, exposed in-process and at `GET /__journal` (test-only
route). Login is cookie-based with a fixed test credential; seeding the
cookie simulates a pre-authenticated session.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import urllib.parse
from dataclasses import dataclass
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..errors import PortInUse
from . import scenarios as sc
from .scenarios import Scenario

logger = logging.getLogger(__name__)


@dataclass
class _State:
    scenarios: dict[str, Scenario]
    journal: list[dict]
    generations: dict[str, int]
    lock: threading.Lock


class _Handler(BaseHTTPRequestHandler):
    server_version = "dara-sandbox/1"
    state: _State  # set on the bound subclass

    def log_message(self, fmt: str, *args) -> None:
        logger.debug("sandbox: " + fmt, *args)

    # -- helpers --

    def _send_html(self, body: str, status: int = 200) -> None:
        data = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "text/html; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _redirect(self, location: str, status: int = 302, cookie: str | None = None) -> None:
        self.send_response(status)
        self.send_header("Location", location)
        if cookie:
            self.send_header("Set-Cookie", cookie)
        self.send_header("Content-Length", "0")
        self.end_headers()

    def _authenticated(self) -> bool:
        header = self.headers.get("Cookie") or ""
        for part in header.split(";"):
            if "=" in part:
                name, value = part.strip().split("=", 1)
                if name == sc.AUTH_COOKIE and value == sc.AUTH_COOKIE_VALUE:
                    return True
        return False

    def _route(self) -> tuple[Scenario | None, str]:
        path = urllib.parse.urlsplit(self.path).path
        parts = [p for p in path.split("/") if p]
        if not parts:
            return None, ""
        scenario = self.state.scenarios.get(parts[0])
        return scenario, "/".join(parts[1:])

    # -- GET --

    def do_GET(self) -> None:
        path = urllib.parse.urlsplit(self.path).path
        if path == "/__journal":
            with self.state.lock:
                body = json.dumps(self.state.journal, ensure_ascii=False).encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return
        if path == "/":
            names = "".join(f"<li>{name}</li>" for name in self.state.scenarios)
            self._send_html(f"<html><body><h1>Sandbox provider</h1><ul>{names}</ul></body></html>")
            return

        scenario, tail = self._route()
        if scenario is None:
            self._send_html("<html><body><h1>Not found</h1></body></html>", 404)
            return

        if tail == "login":
            self._send_html(sc.render_login_page(scenario))
        elif tail == "privacy/dsar":
            self._serve_form(scenario)
        elif tail == "confirm":
            self._send_html(sc.render_confirm_page(scenario))
        else:
            self._send_html("<html><body><h1>Not found</h1></body></html>", 404)

    def _serve_form(self, scenario: Scenario) -> None:
        if scenario.requires_login and not self._authenticated():
            self._redirect(f"/{scenario.name}/login")
            return
        if scenario.failure_mode == "redirect-loop":
            self._redirect(f"/{scenario.name}/privacy/dsar")
            return
        if scenario.failure_mode == "slow" and scenario.latency_ms:
            time.sleep(scenario.latency_ms / 1000)
        with self.state.lock:
            generation = self.state.generations.get(scenario.name, 0)
            self.state.generations[scenario.name] = generation + 1
        self._send_html(sc.render_form_page(scenario, generation))

    # -- POST --

    def do_POST(self) -> None:
        scenario, tail = self._route()
        if scenario is None:
            self._send_html("<html><body><h1>Not found</h1></body></html>", 404)
            return
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length).decode("utf-8") if length else ""
        fields = {k: v[-1] for k, v in urllib.parse.parse_qs(raw, keep_blank_values=True).items()}

        if tail == "login":
            if fields.get("username") == sc.LOGIN_USER and fields.get("password") == sc.LOGIN_PASSWORD:
                self._redirect(
                    f"/{scenario.name}/privacy/dsar",
                    status=303,
                    cookie=f"{sc.AUTH_COOKIE}={sc.AUTH_COOKIE_VALUE}; Path=/",
                )
            else:
                self._send_html(sc.render_login_page(scenario), 403)
            return

        if tail == "submit":
            if scenario.requires_login and not self._authenticated():
                self._redirect(f"/{scenario.name}/login")
                return
            entry = {
                "scenario": scenario.name,
                "fields": fields,
                "receivedAt": datetime.now(timezone.utc).isoformat(),
            }
            with self.state.lock:
                self.state.journal.append(entry)
            self._redirect(f"/{scenario.name}/confirm", status=303)
            return

        self._send_html("<html><body><h1>Not found</h1></body></html>", 404)


class SandboxHandle:
    def __init__(self, server: ThreadingHTTPServer, thread: threading.Thread, state: _State):
        self._server = server
        self._thread = thread
        self._state = state
        self.port = server.server_address[1]
        self.base_url = f"http://127.0.0.1:{self.port}"

    def journal(self) -> list[dict]:
        """Received DSAR submissions, in arrival order."""
        with self._state.lock:
            return [dict(entry) for entry in self._state.journal]

    def generation(self, scenario_name: str) -> int:
        """How many times the scenario's form page has been served."""
        with self._state.lock:
            return self._state.generations.get(scenario_name, 0)

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)


def serve(scenario_list: list[Scenario] | tuple[Scenario, ...] = sc.BUILTIN_SCENARIOS,
          port: int = 0, host: str = "127.0.0.1") -> SandboxHandle:
    """Serve the scenarios; returns a handle with journal access and stop()."""
    state = _State(
        scenarios={s.name: s for s in scenario_list},
        journal=[],
        generations={},
        lock=threading.Lock(),
    )
    handler = type("BoundHandler", (_Handler,), {"state": state})
    try:
        server = ThreadingHTTPServer((host, port), handler)
    except OSError as exc:
        if exc.errno == 98:  # EADDRINUSE
            raise PortInUse(port) from exc
        raise
    server.daemon_threads = True
    thread = threading.Thread(target=server.serve_forever, name="dara-sandbox", daemon=True)
    thread.start()
    logger.info("sandbox provider listening on %s:%s", host, server.server_address[1])
    return SandboxHandle(server, thread, state)
