from __future__ import annotations

import copy
import socket
import threading
import time
from pathlib import Path

import pytest
import uvicorn

from dara.document import DarpalDocument
from dara.minidriver import serve as serve_minidriver
from dara.repository.service import create_app
from dara.sandbox import serve as serve_sandbox

REPO_ROOT = Path(__file__).resolve().parent.parent
CORPUS_DIR = REPO_ROOT / "corpus"
SCHEMA_PATH = REPO_ROOT / "schema" / "darpal.schema.json"

# Frozen via `sha256sum` over the canonical bytes (independent hashing utility).
MINIMAL_GOLDEN_DIGEST = "793a9a377c7fbda33869ab5edd53284ab60bbeb5d8055f42779e717fadb95204"

MINIMAL_DOC_DATA = {
    "$schemaVersion": "1.0",
    "meta": {"name": "Minimal Provider", "version": "1.0", "_hash": "0" * 64},
    "requestParameter": {
        "timeRange": {"allTime": True, "customRange": False},
        "dataFormat": ["json"],
    },
    "requestInterface": {
        "manual": {"available": False},
        "webinterface": {
            "available": False,
            "workflowContainer": {
                "automationEngine": "dara-engine/1",
                "workflow": [],
                "version": "1.0",
                "verified": False,
            },
        },
        "api": {"available": False},
    },
}


def minimal_document() -> DarpalDocument:
    return DarpalDocument(copy.deepcopy(MINIMAL_DOC_DATA))


def corpus_paths() -> list[Path]:
    return sorted(CORPUS_DIR.glob("*.darpal.json"))


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class RepoServer:
    """Process repository served by uvicorn in a thread; restartable on the
    same store directory for durability tests."""

    def __init__(self, store_dir: Path, port: int | None = None):
        self.store_dir = store_dir
        self.port = port or free_port()
        self.url = f"http://127.0.0.1:{self.port}"
        self._server: uvicorn.Server | None = None
        self._thread: threading.Thread | None = None

    def start(self) -> "RepoServer":
        config = uvicorn.Config(
            create_app(self.store_dir), host="127.0.0.1", port=self.port, log_level="warning"
        )
        self._server = uvicorn.Server(config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)
        self._thread.start()
        deadline = time.monotonic() + 10
        while not self._server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("repository server did not start")
            time.sleep(0.02)
        return self

    def stop(self) -> None:
        if self._server is not None:
            self._server.should_exit = True
        if self._thread is not None:
            self._thread.join(timeout=10)
        self._server = None
        self._thread = None


@pytest.fixture()
def sandbox():
    handle = serve_sandbox()
    yield handle
    handle.stop()


@pytest.fixture(scope="session")
def minidriver():
    handle = serve_minidriver()
    yield handle
    handle.stop()


@pytest.fixture()
def repo_server(tmp_path):
    server = RepoServer(tmp_path / "store").start()
    yield server
    server.stop()


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].replace("test_", "", 1)
    status = "PASS" if report.passed else "FAIL"
    print(f"\n[ACCEPTANCE] {name}: {status}")
