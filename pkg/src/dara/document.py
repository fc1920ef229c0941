"""DARPAL document core: parsing, validation, canonical form, and hashing.

A DARPAL document describes one provider's data request process. It is a JSON
object with three mandatory sections (``meta``, ``requestParameter``,
``requestInterface``) plus a ``$schemaVersion`` identification field. Unknown
fields are preserved verbatim so documents written by newer tooling round-trip
unchanged.

The canonical form (sorted keys, no insignificant whitespace, UTF-8,
``meta._hash`` excluded) is the input to the SHA-256 integrity hash stored in
``meta._hash``.
"""

from __future__ import annotations

import copy
import json
import hashlib
import re
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping
from urllib.parse import urlsplit

from .errors import DocumentSyntaxError, NotValidatedError, StructureError

SCHEMA_VERSION = "1.0"
SECTIONS = ("meta", "requestParameter", "requestInterface")
INTERFACE_BRANCHES = ("manual", "webinterface", "api")

# Open vocabulary; values outside this set validate with a warning.
RECOMMENDED_AUTH_METHODS = frozenset(
    {"password", "id-card", "email-verification", "account-login", "none"}
)

# Deleting any one of these from a valid document must flip it invalid, with a
# finding at exactly that path.
MANDATORY_FIELD_PATHS = (
    "$schemaVersion",
    "meta.name",
    "meta.version",
    "meta._hash",
    "requestParameter.timeRange",
    "requestParameter.timeRange.allTime",
    "requestParameter.timeRange.customRange",
    "requestParameter.dataFormat",
    "requestInterface.manual.available",
    "requestInterface.webinterface.available",
    "requestInterface.api.available",
)

_VERSION_RE = re.compile(r"^\d+(\.\d+)*$")
_HASH_RE = re.compile(r"^[0-9a-f]{64}$")
_KEBAB_RE = re.compile(r"^[a-z0-9]+(-[a-z0-9]+)*$")
_HASH_PLACEHOLDER = "0" * 64


@dataclass(frozen=True)
class DarpalDocument:
    """One provider's full DRP specification.

    Wraps the raw JSON mapping as the single source of truth so that unknown
    fields survive a parse/serialize round trip. Structural equality is deep
    equality of the underlying data.
    """

    data: dict[str, Any]

    # -- typed accessors over the raw mapping --

    @property
    def meta(self) -> dict[str, Any]:
        return self.data.get("meta", {})

    @property
    def name(self) -> str:
        return self.meta.get("name", "")

    @property
    def version(self) -> str:
        return self.meta.get("version", "")

    @property
    def embedded_hash(self) -> str:
        return self.meta.get("_hash", "")

    @property
    def request_parameter(self) -> dict[str, Any]:
        return self.data.get("requestParameter", {})

    @property
    def request_interface(self) -> dict[str, Any]:
        return self.data.get("requestInterface", {})

    @property
    def webinterface(self) -> dict[str, Any]:
        return self.request_interface.get("webinterface", {})

    @property
    def start_url(self) -> str:
        return self.webinterface.get("startUrl", "")

    @property
    def api_endpoint(self) -> str:
        api = self.request_interface.get("api", {})
        # `endpointUrl` is accepted as a legacy alias for `endpoint`.
        return api.get("endpoint") or api.get("endpointUrl") or ""

    @property
    def workflow_container(self) -> dict[str, Any] | None:
        container = self.webinterface.get("workflowContainer")
        return container if isinstance(container, dict) else None

    def to_dict(self) -> dict[str, Any]:
        return copy.deepcopy(self.data)


@dataclass(frozen=True)
class Finding:
    path: str
    severity: str  # "error" | "warning"
    message: str

    def render(self) -> str:
        return f"{self.path}: {self.severity}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...] = ()

    @property
    def valid(self) -> bool:
        return not any(f.severity == "error" for f in self.findings)

    @property
    def errors(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == "error")

    @property
    def warnings(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == "warning")


def parse_document(text: str | bytes) -> DarpalDocument:
    """Parse UTF-8 JSON text into a document, preserving unknown fields.

    Raises DocumentSyntaxError on malformed JSON (with line/column) and
    StructureError when the input is not an object or a mandatory top-level
    section is missing.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentSyntaxError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(data, dict):
        raise StructureError("document root must be a JSON object")
    for section in SECTIONS:
        if section not in data:
            raise StructureError(f"missing mandatory section {section!r}")
    return DarpalDocument(data)


def serialize_document(doc: DarpalDocument, *, pretty: bool = True) -> str:
    """Serialize verbatim (key order and unknown fields preserved)."""
    if pretty:
        return json.dumps(doc.data, indent=2, ensure_ascii=False) + "\n"
    return json.dumps(doc.data, ensure_ascii=False)


# --- validation ---------------------------------------------------------------


class _Collector:
    def __init__(self) -> None:
        self.findings: list[Finding] = []

    def error(self, path: str, message: str) -> None:
        self.findings.append(Finding(path, "error", message))

    def warning(self, path: str, message: str) -> None:
        self.findings.append(Finding(path, "warning", message))


def is_absolute_url(value: Any) -> bool:
    if not isinstance(value, str) or not value:
        return False
    parts = urlsplit(value)
    return parts.scheme in ("http", "https") and bool(parts.netloc)


def _check_string(out: _Collector, value: Any, path: str, *, allow_empty: bool = False) -> bool:
    if value is None:
        out.error(path, "missing mandatory field")
        return False
    if not isinstance(value, str):
        out.error(path, "must be a string")
        return False
    if not value and not allow_empty:
        out.error(path, "must be non-empty")
        return False
    return True


def _validate_authentication(out: _Collector, branch: Mapping[str, Any], path: str) -> None:
    auth = branch.get("authentication")
    if auth is None:
        return
    if not isinstance(auth, dict) or not isinstance(auth.get("methods"), list):
        out.error(f"{path}.authentication", "must be an object with a 'methods' list")
        return
    for i, method in enumerate(auth["methods"]):
        mpath = f"{path}.authentication.methods[{i}]"
        if not isinstance(method, str) or not _KEBAB_RE.match(method or ""):
            out.error(mpath, "must be a non-empty lowercase-kebab identifier")
        elif method not in RECOMMENDED_AUTH_METHODS:
            out.warning(mpath, f"{method!r} is outside the recommended vocabulary")


def _validate_meta(out: _Collector, data: Mapping[str, Any]) -> None:
    meta = data.get("meta")
    if not isinstance(meta, dict):
        out.error("meta", "must be an object")
        return
    _check_string(out, meta.get("name"), "meta.name")
    version = meta.get("version")
    if _check_string(out, version, "meta.version") and not _VERSION_RE.match(version):
        out.error("meta.version", "must be dotted integers, e.g. '1.0'")
    digest = meta.get("_hash")
    if _check_string(out, digest, "meta._hash") and not _HASH_RE.match(digest):
        out.error("meta._hash", "must be 64 lowercase hex characters")


def _validate_request_parameter(out: _Collector, data: Mapping[str, Any]) -> None:
    params = data.get("requestParameter")
    if not isinstance(params, dict):
        out.error("requestParameter", "must be an object")
        return

    time_range = params.get("timeRange")
    if time_range is None:
        out.error("requestParameter.timeRange", "missing mandatory field")
    elif not isinstance(time_range, dict):
        out.error("requestParameter.timeRange", "must be an object")
    else:
        flags = {}
        for flag in ("allTime", "customRange"):
            fpath = f"requestParameter.timeRange.{flag}"
            value = time_range.get(flag)
            if value is None:
                out.error(fpath, "missing mandatory field")
            elif not isinstance(value, bool):
                out.error(fpath, "must be a boolean")
            else:
                flags[flag] = value
        if len(flags) == 2 and not any(flags.values()):
            out.error(
                "requestParameter.timeRange",
                "at least one of allTime/customRange must be true",
            )

    formats = params.get("dataFormat")
    if formats is None:
        out.error("requestParameter.dataFormat", "missing mandatory field")
    elif not isinstance(formats, list) or not formats:
        out.error("requestParameter.dataFormat", "must be a non-empty list")
    else:
        for i, item in enumerate(formats):
            if not isinstance(item, str) or not item:
                out.error(f"requestParameter.dataFormat[{i}]", "must be a non-empty string")

    quality = params.get("mediaQuality")
    if quality is not None:
        if not isinstance(quality, list):
            out.error("requestParameter.mediaQuality", "must be a list")
        elif not quality:
            out.warning("requestParameter.mediaQuality", "declared but empty")
        else:
            for i, item in enumerate(quality):
                if not isinstance(item, str) or not item:
                    out.error(f"requestParameter.mediaQuality[{i}]", "must be a non-empty string")

    extras = params.get("additionalProperties")
    if extras is not None:
        if not isinstance(extras, dict):
            out.error("requestParameter.additionalProperties", "must be an object")
        else:
            for key, descriptor in extras.items():
                dpath = f"requestParameter.additionalProperties.{key}"
                if not isinstance(descriptor, dict):
                    out.error(dpath, "descriptor must be an object")
                    continue
                options = descriptor.get("options")
                if options is not None and (
                    not isinstance(options, list)
                    or any(not isinstance(o, str) or not o for o in options)
                ):
                    out.error(f"{dpath}.options", "must be a list of non-empty strings")


def _validate_workflow_container(out: _Collector, container: Any, path: str) -> None:
    if not isinstance(container, dict):
        out.error(path, "must be an object")
        return
    _check_string(out, container.get("automationEngine"), f"{path}.automationEngine")
    workflow = container.get("workflow")
    if workflow is None:
        out.error(f"{path}.workflow", "missing mandatory field")
    elif not isinstance(workflow, list):
        out.error(f"{path}.workflow", "must be a list")
    else:
        for i, block in enumerate(workflow):
            if not isinstance(block, dict):
                out.error(f"{path}.workflow[{i}]", "must be an object")
    version = container.get("version")
    if _check_string(out, version, f"{path}.version") and not _VERSION_RE.match(version):
        out.warning(f"{path}.version", "does not look like dotted integers")
    verified = container.get("verified")
    if verified is None:
        out.error(f"{path}.verified", "missing mandatory field")
    elif not isinstance(verified, bool):
        out.error(f"{path}.verified", "must be a boolean")


def _validate_request_interface(out: _Collector, data: Mapping[str, Any]) -> None:
    interface = data.get("requestInterface")
    if not isinstance(interface, dict):
        out.error("requestInterface", "must be an object")
        return

    available_flags = []
    for branch_name in INTERFACE_BRANCHES:
        path = f"requestInterface.{branch_name}"
        branch = interface.get(branch_name)
        if branch is None:
            out.error(path, "missing mandatory interface branch")
            continue
        if not isinstance(branch, dict):
            out.error(path, "must be an object")
            continue
        available = branch.get("available")
        if available is None:
            out.error(f"{path}.available", "missing mandatory field")
            continue
        if not isinstance(available, bool):
            out.error(f"{path}.available", "must be a boolean")
            continue
        available_flags.append(available)
        _validate_authentication(out, branch, path)

        if branch_name == "manual" and available:
            if not any(
                isinstance(branch.get(k), str) and branch.get(k)
                for k in ("address", "email", "phone")
            ):
                out.error(path, "available manual interface needs address, email, or phone")
        elif branch_name == "webinterface":
            if available and not is_absolute_url(branch.get("startUrl")):
                out.error(f"{path}.startUrl", "must be an absolute http(s) URL")
            if "workflowContainer" in branch:
                _validate_workflow_container(
                    out, branch["workflowContainer"], f"{path}.workflowContainer"
                )
        elif branch_name == "api" and available:
            endpoint = branch.get("endpoint")
            alias = branch.get("endpointUrl")
            if endpoint is None and alias is not None:
                out.warning(f"{path}.endpointUrl", "legacy alias; rename to 'endpoint'")
                endpoint = alias
            if not is_absolute_url(endpoint):
                out.error(f"{path}.endpoint", "must be an absolute http(s) URL")

    if available_flags and not any(available_flags):
        out.warning("requestInterface", "no interface branch is available")


def validate_document(doc: DarpalDocument) -> ValidationReport:
    """Check every mandatory-field and invariant rule.

    Violations are report content with exact document paths; nothing raises.
    """
    out = _Collector()
    data = doc.data

    schema_version = data.get("$schemaVersion")
    if schema_version is None:
        out.error("$schemaVersion", "missing mandatory field")
    elif not isinstance(schema_version, str):
        out.error("$schemaVersion", "must be a string")
    elif schema_version != SCHEMA_VERSION:
        out.warning("$schemaVersion", f"unknown schema version {schema_version!r}")

    _validate_meta(out, data)
    _validate_request_parameter(out, data)
    _validate_request_interface(out, data)
    return ValidationReport(tuple(out.findings))


# --- canonical form and hashing -----------------------------------------------


def canonicalize(doc: DarpalDocument) -> bytes:
    """Deterministic byte form: sorted keys, compact, UTF-8, `meta._hash` excluded.

    Raises NotValidatedError when the document fails validation.
    """
    report = validate_document(doc)
    if not report.valid:
        raise NotValidatedError(report)
    stripped = copy.deepcopy(doc.data)
    stripped.get("meta", {}).pop("_hash", None)
    return json.dumps(
        stripped, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def compute_hash(doc: DarpalDocument) -> str:
    """SHA-256 over the canonical form, lowercase hex."""
    return hashlib.sha256(canonicalize(doc)).hexdigest()


def verify_hash(doc: DarpalDocument) -> bool:
    """True iff the embedded `meta._hash` matches the recomputed digest."""
    return doc.embedded_hash == compute_hash(doc)


def with_embedded_hash(doc: DarpalDocument) -> DarpalDocument:
    """Return a copy with `meta._hash` set to the computed digest.

    Works for documents that do not carry a hash yet: the digest is computed
    over the canonical form, which excludes `meta._hash` anyway, so a
    placeholder is injected just to satisfy validation.
    """
    data = copy.deepcopy(doc.data)
    meta = data.setdefault("meta", {})
    current = meta.get("_hash")
    if not (isinstance(current, str) and _HASH_RE.match(current)):
        meta["_hash"] = _HASH_PLACEHOLDER
    candidate = DarpalDocument(data)
    digest = compute_hash(candidate)
    if meta["_hash"] == digest:
        return candidate
    data = copy.deepcopy(data)
    data["meta"]["_hash"] = digest
    return DarpalDocument(data)


# --- provider names and versions ------------------------------------------------


def normalize_provider_name(name: str) -> str:
    """Lowercase-kebab form used as the repository key, e.g. 'My Service' -> 'my-service'."""
    slug = re.sub(r"[^a-z0-9]+", "-", name.casefold()).strip("-")
    return slug


def version_key(version: str) -> tuple[int, ...]:
    """Sort key for dotted-integer version strings."""
    if not _VERSION_RE.match(version):
        raise ValueError(f"not a dotted-integer version: {version!r}")
    return tuple(int(part) for part in version.split("."))


def version_greater(candidate: str, current: str) -> bool:
    return version_key(candidate) > version_key(current)


def iter_mandatory_paths() -> Iterator[str]:
    return iter(MANDATORY_FIELD_PATHS)
