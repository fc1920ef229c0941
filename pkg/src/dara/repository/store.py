"""File-backed versioned document store.

Layout: one directory per provider under the store root:

    <root>/<provider>/current.darpal.json   canonical serialization, hash included
    <root>/<provider>/history.log           JSON lines {version, hash, storedAt}
    <root>/<provider>/reports.log           JSON lines, append-only execution reports

Everything is inspectable and diff-able; no database involved. Writes go
through a per-provider lock plus write-to-temp + atomic rename, so readers
never observe partial state and concurrent puts serialize cleanly.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from ..document import (
    DarpalDocument,
    ValidationReport,
    compute_hash,
    normalize_provider_name,
    parse_document,
    validate_document,
    verify_hash,
    version_greater,
)
from ..errors import DaraError

CURRENT_FILE = "current.darpal.json"
HISTORY_FILE = "history.log"
REPORTS_FILE = "reports.log"

OUTCOMES = ("success", "interaction-required", "error")

_PROVIDER_RE = re.compile(r"^[a-z0-9]+(-[a-z0-9]+)*$")


class ProviderNotFound(DaraError):
    def __init__(self, provider: str):
        super().__init__(f"no such provider: {provider!r}")
        self.provider = provider


class ValidationFailed(DaraError):
    def __init__(self, report: ValidationReport):
        super().__init__(f"document failed validation with {len(report.errors)} error(s)")
        self.report = report


class HashMismatch(DaraError):
    pass


class VersionConflict(DaraError):
    pass


class NameMismatch(DaraError):
    pass


class IntegrityError(DaraError):
    """A stored document no longer verifies its own hash."""


@dataclass(frozen=True)
class StoredInfo:
    provider: str
    version: str
    hash: str
    verified: bool
    created: bool = False


def _canonical_file_bytes(doc: DarpalDocument) -> bytes:
    # Canonical layout with the hash included; GET serves these exact bytes.
    return (
        json.dumps(doc.data, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"
    ).encode("utf-8")


def _container_verified(doc: DarpalDocument) -> bool:
    container = doc.workflow_container
    return bool(container.get("verified")) if container else False


class DocumentStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, provider: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(provider, threading.Lock())

    def _dir(self, provider: str) -> Path:
        if not _PROVIDER_RE.match(provider):
            raise ProviderNotFound(provider)
        return self.root / provider

    # -- reads --

    def list_providers(self) -> list[dict]:
        rows = []
        for entry in sorted(self.root.iterdir()) if self.root.exists() else []:
            if not entry.is_dir() or not (entry / CURRENT_FILE).exists():
                continue
            doc = self._read_current(entry.name)
            rows.append(
                {
                    "provider": entry.name,
                    "version": doc.version,
                    "hash": doc.embedded_hash,
                    "verified": _container_verified(doc),
                }
            )
        return rows

    def _read_current(self, provider: str) -> DarpalDocument:
        path = self._dir(provider) / CURRENT_FILE
        if not path.exists():
            raise ProviderNotFound(provider)
        doc = parse_document(path.read_bytes())
        if not verify_hash(doc):
            raise IntegrityError(f"stored document for {provider!r} fails hash verification")
        return doc

    def get_document(self, provider: str) -> tuple[DarpalDocument, bytes]:
        """Return the current document and its exact stored bytes."""
        doc = self._read_current(provider)
        return doc, (self._dir(provider) / CURRENT_FILE).read_bytes()

    def history(self, provider: str) -> list[dict]:
        path = self._dir(provider) / HISTORY_FILE
        if not (self._dir(provider) / CURRENT_FILE).exists():
            raise ProviderNotFound(provider)
        if not path.exists():
            return []
        return [json.loads(line) for line in path.read_text("utf-8").splitlines() if line]

    # -- writes --

    def put_document(self, provider: str, doc: DarpalDocument) -> StoredInfo:
        report = validate_document(doc)
        if not report.valid:
            raise ValidationFailed(report)
        if not verify_hash(doc):
            raise HashMismatch(
                f"embedded hash {doc.embedded_hash[:12]}... does not match the canonical form"
            )
        if normalize_provider_name(doc.name) != provider:
            raise NameMismatch(
                f"document is for {normalize_provider_name(doc.name)!r}, endpoint is {provider!r}"
            )

        with self._lock(provider):
            directory = self._dir(provider)
            created = not (directory / CURRENT_FILE).exists()
            if not created:
                current = self._read_current(provider)
                if not version_greater(doc.version, current.version):
                    raise VersionConflict(
                        f"version {doc.version} is not greater than stored {current.version}"
                    )
            directory.mkdir(parents=True, exist_ok=True)
            digest = compute_hash(doc)
            tmp = directory / (CURRENT_FILE + ".tmp")
            tmp.write_bytes(_canonical_file_bytes(doc))
            os.replace(tmp, directory / CURRENT_FILE)
            entry = {
                "version": doc.version,
                "hash": digest,
                "storedAt": datetime.now(timezone.utc).isoformat(),
            }
            with open(directory / HISTORY_FILE, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry) + "\n")
            return StoredInfo(
                provider=provider,
                version=doc.version,
                hash=digest,
                verified=_container_verified(doc),
                created=created,
            )

    def delete_document(self, provider: str) -> None:
        with self._lock(provider):
            directory = self._dir(provider)
            if not (directory / CURRENT_FILE).exists():
                raise ProviderNotFound(provider)
            for name in (CURRENT_FILE, HISTORY_FILE, REPORTS_FILE):
                path = directory / name
                if path.exists():
                    path.unlink()
            try:
                directory.rmdir()
            except OSError:
                pass  # unrelated files left behind; keep them

    # -- execution reports --

    def add_report(self, provider: str, outcome: str, engine_version: str,
                   reported_at: str | None = None) -> dict:
        if outcome not in OUTCOMES:
            raise ValueError(f"outcome must be one of {OUTCOMES}, got {outcome!r}")
        with self._lock(provider):
            directory = self._dir(provider)
            if not (directory / CURRENT_FILE).exists():
                raise ProviderNotFound(provider)
            entry = {
                "provider": provider,
                "outcome": outcome,
                "engineVersion": engine_version,
                "reportedAt": reported_at or datetime.now(timezone.utc).isoformat(),
            }
            with open(directory / REPORTS_FILE, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry) + "\n")
            return entry

    def report_summary(self, provider: str) -> dict:
        directory = self._dir(provider)
        if not (directory / CURRENT_FILE).exists():
            raise ProviderNotFound(provider)
        counts = {outcome: 0 for outcome in OUTCOMES}
        path = directory / REPORTS_FILE
        if path.exists():
            for line in path.read_text("utf-8").splitlines():
                if not line:
                    continue
                outcome = json.loads(line).get("outcome")
                if outcome in counts:
                    counts[outcome] += 1
        return {"provider": provider, "counts": counts, "total": sum(counts.values())}

    # -- maintenance --

    def seed_from_directory(self, corpus_dir: str | Path) -> list[StoredInfo]:
        """Load every `*.darpal.json` under `corpus_dir` (initial fill)."""
        stored = []
        for path in sorted(Path(corpus_dir).glob("*.darpal.json")):
            doc = parse_document(path.read_bytes())
            provider = normalize_provider_name(doc.name)
            try:
                stored.append(self.put_document(provider, doc))
            except VersionConflict:
                continue  # already seeded at this or a later version
        return stored
