"""Block vocabulary for the "dara-engine/1" automation engine.

A workflow container is engine-tagged; containers for other engines pass
through with a warning and no deep validation. For dara-engine/1 the workflow
is an ordered list of blocks:

    navigate            load `url`
    wait-for-element    poll `selector` until present or `timeoutMs`
    click               click the resolved element
    fill-field          clear the resolved element, then type `value`
    select-option       choose the option of the resolved <select> whose
                        value (or visible text) equals `value`
    submit              click the resolved submit control
    assert-url          current location must start with `url`
    emit-signal         forward a named progress signal to the sink
    delay               sleep `timeoutMs`
    branch-on-element   jump to block `onMissing` when the element is absent

Control flow is a linear sequence plus the single forward jump of
branch-on-element; backward jumps are rejected so workflows cannot loop.
Values and URLs may carry `{{param.<path>}}` placeholders which
`bind_parameters` substitutes from a user's request customization.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date
from typing import Any, Mapping

from .document import (
    DarpalDocument,
    Finding,
    ValidationReport,
    compute_hash,
    normalize_provider_name,
)
from .errors import EngineMismatch, SelectionOutOfRange, UnknownPlaceholder

ENGINE_ID = "dara-engine/1"

BLOCK_KINDS = frozenset(
    {
        "navigate",
        "wait-for-element",
        "click",
        "fill-field",
        "select-option",
        "submit",
        "assert-url",
        "emit-signal",
        "delay",
        "branch-on-element",
    }
)
SELECTOR_KINDS = frozenset(
    {"wait-for-element", "click", "fill-field", "select-option", "branch-on-element"}
)
URL_KINDS = frozenset({"navigate", "assert-url"})

_PLACEHOLDER_RE = re.compile(r"\{\{\s*([^{}]*?)\s*\}\}")
_PARAM_PATH_RE = re.compile(r"^param\.[A-Za-z0-9_-]+(\.[A-Za-z0-9_-]+)*$")


@dataclass(frozen=True)
class Selector:
    expression: str
    strategy: str = "xpath"  # default per the block vocabulary


@dataclass(frozen=True)
class WorkflowBlock:
    id: str
    kind: str
    selector: Selector | None = None
    value: str | None = None
    signal: str | None = None
    url: str | None = None
    timeout_ms: int | None = None
    on_missing: str | None = None

    @classmethod
    def from_mapping(cls, obj: Mapping[str, Any]) -> "WorkflowBlock":
        selector = None
        raw = obj.get("selector")
        if isinstance(raw, Mapping):
            selector = Selector(
                expression=str(raw.get("expression", "")),
                strategy=str(raw.get("strategy", "xpath")),
            )
        return cls(
            id=str(obj.get("id", "")),
            kind=str(obj.get("kind", "")),
            selector=selector,
            value=obj.get("value"),
            signal=obj.get("signal"),
            url=obj.get("url"),
            timeout_ms=obj.get("timeoutMs"),
            on_missing=obj.get("onMissing"),
        )

    def to_mapping(self) -> dict[str, Any]:
        out: dict[str, Any] = {"id": self.id, "kind": self.kind}
        if self.selector is not None:
            out["selector"] = {
                "strategy": self.selector.strategy,
                "expression": self.selector.expression,
            }
        for key, value in (
            ("value", self.value),
            ("signal", self.signal),
            ("url", self.url),
            ("timeoutMs", self.timeout_ms),
            ("onMissing", self.on_missing),
        ):
            if value is not None:
                out[key] = value
        return out


@dataclass(frozen=True)
class ParameterSelection:
    """User's request customization, checked against the document on bind."""

    data_format: str
    all_time: bool = True
    start: date | None = None
    end: date | None = None
    media_quality: str | None = None
    extras: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.all_time:
            if self.start is not None or self.end is not None:
                raise ValueError("all-time selection must not carry start/end dates")
        else:
            if self.start is None or self.end is None:
                raise ValueError("custom range selection needs start and end dates")
            if self.start > self.end:
                raise ValueError("time range start must not be after end")


@dataclass(frozen=True)
class BoundWorkflow:
    """Executable workflow: all placeholders substituted, source pinned by hash."""

    blocks: tuple[WorkflowBlock, ...]
    provider: str
    source_hash: str
    start_url: str


def _template_findings(text: str, path: str) -> list[Finding]:
    findings = []
    stripped = _PLACEHOLDER_RE.sub("", text)
    if "{{" in stripped or "}}" in stripped:
        findings.append(Finding(path, "error", "malformed template: unbalanced braces"))
    for match in _PLACEHOLDER_RE.finditer(text):
        inner = match.group(1)
        if not _PARAM_PATH_RE.match(inner):
            findings.append(
                Finding(path, "error", f"malformed placeholder {{{{{inner}}}}}")
            )
    return findings


def validate_workflow(container: Mapping[str, Any]) -> ValidationReport:
    """Deep-validate a dara-engine/1 workflow container.

    Containers tagged for other engines yield a single warning and skip deep
    validation; their blocks are opaque engine-specific objects.
    """
    findings: list[Finding] = []
    engine = container.get("automationEngine")
    if engine != ENGINE_ID:
        findings.append(
            Finding(
                "automationEngine",
                "warning",
                f"engine {engine!r} is not {ENGINE_ID}; skipping deep validation",
            )
        )
        return ValidationReport(tuple(findings))

    workflow = container.get("workflow")
    if not isinstance(workflow, list):
        findings.append(Finding("workflow", "error", "must be a list of blocks"))
        return ValidationReport(tuple(findings))
    if not workflow:
        findings.append(Finding("workflow", "warning", "workflow is empty"))
        return ValidationReport(tuple(findings))

    ids: dict[str, int] = {}
    blocks: list[WorkflowBlock] = []
    for i, raw in enumerate(workflow):
        path = f"workflow[{i}]"
        if not isinstance(raw, Mapping):
            findings.append(Finding(path, "error", "block must be an object"))
            continue
        block = WorkflowBlock.from_mapping(raw)
        blocks.append(block)

        if not block.id:
            findings.append(Finding(f"{path}.id", "error", "block id must be non-empty"))
        elif block.id in ids:
            findings.append(
                Finding(
                    f"{path}.id",
                    "error",
                    f"duplicate block id {block.id!r} (positions {ids[block.id]} and {i})",
                )
            )
        else:
            ids[block.id] = i

        if block.kind not in BLOCK_KINDS:
            findings.append(Finding(f"{path}.kind", "error", f"unknown kind {block.kind!r}"))
            continue

        if block.kind in SELECTOR_KINDS and block.selector is None:
            findings.append(
                Finding(f"{path}.selector", "error", f"{block.kind} requires a selector")
            )
        if block.selector is not None:
            if not block.selector.expression:
                findings.append(
                    Finding(f"{path}.selector.expression", "error", "must be non-empty")
                )
            if block.selector.strategy not in ("xpath", "css"):
                findings.append(
                    Finding(
                        f"{path}.selector.strategy",
                        "error",
                        f"unknown strategy {block.selector.strategy!r}",
                    )
                )
        if block.kind in URL_KINDS and not block.url:
            findings.append(Finding(f"{path}.url", "error", f"{block.kind} requires a url"))
        if block.kind in ("fill-field", "select-option") and block.value is None:
            findings.append(Finding(f"{path}.value", "error", f"{block.kind} requires a value"))
        if block.kind == "emit-signal" and not block.signal:
            findings.append(Finding(f"{path}.signal", "error", "emit-signal requires a signal name"))
        if block.kind == "delay" and block.timeout_ms is None:
            findings.append(Finding(f"{path}.timeoutMs", "error", "delay requires timeoutMs"))
        if block.kind == "branch-on-element" and not block.on_missing:
            findings.append(
                Finding(f"{path}.onMissing", "error", "branch-on-element requires onMissing")
            )

        if block.timeout_ms is not None and (
            isinstance(block.timeout_ms, bool)
            or not isinstance(block.timeout_ms, int)
            or block.timeout_ms < 0
        ):
            findings.append(
                Finding(f"{path}.timeoutMs", "error", "timeoutMs must be a non-negative integer")
            )

        for text, sub in ((block.value, "value"), (block.url, "url")):
            if isinstance(text, str):
                findings.extend(_template_findings(text, f"{path}.{sub}"))

    # Jump targets must exist and point forward; backward jumps could loop.
    for i, block in enumerate(blocks):
        if block.kind != "branch-on-element" or not block.on_missing:
            continue
        target = ids.get(block.on_missing)
        if target is None:
            findings.append(
                Finding(
                    f"workflow[{i}].onMissing",
                    "error",
                    f"onMissing references unknown block id {block.on_missing!r}",
                )
            )
        elif target <= i:
            findings.append(
                Finding(
                    f"workflow[{i}].onMissing",
                    "error",
                    f"onMissing must reference a later block, not position {target}",
                )
            )

    return ValidationReport(tuple(findings))


# --- parameter binding ----------------------------------------------------------


def check_selection(doc: DarpalDocument, sel: ParameterSelection) -> None:
    """Raise SelectionOutOfRange when `sel` is not covered by the document."""
    params = doc.request_parameter
    time_range = params.get("timeRange", {})
    if sel.all_time:
        if not time_range.get("allTime"):
            raise SelectionOutOfRange("timeRange", "document does not offer all-time")
    else:
        if not time_range.get("customRange"):
            raise SelectionOutOfRange("timeRange", "document does not offer a custom range")

    formats = params.get("dataFormat") or []
    if sel.data_format not in formats:
        raise SelectionOutOfRange(
            "dataFormat", f"{sel.data_format!r} not one of {sorted(formats)}"
        )

    if sel.media_quality is not None:
        qualities = params.get("mediaQuality") or []
        if sel.media_quality not in qualities:
            raise SelectionOutOfRange(
                "mediaQuality", f"{sel.media_quality!r} not one of {sorted(qualities)}"
            )

    declared = params.get("additionalProperties") or {}
    for key, value in sel.extras.items():
        if key not in declared:
            raise SelectionOutOfRange(key, "not declared by the document")
        options = declared[key].get("options") if isinstance(declared[key], dict) else None
        if options and value not in options:
            raise SelectionOutOfRange(key, f"{value!r} not one of {sorted(options)}")


def _substitution_values(sel: ParameterSelection) -> dict[str, str]:
    values = {
        "param.timeRange": "all-time" if sel.all_time else "custom",
        "param.timeRange.start": sel.start.isoformat() if sel.start else "",
        "param.timeRange.end": sel.end.isoformat() if sel.end else "",
        "param.dataFormat": sel.data_format,
    }
    if sel.media_quality is not None:
        values["param.mediaQuality"] = sel.media_quality
    for key, value in sel.extras.items():
        values[f"param.{key}"] = value
    return values


def _substitute(text: str, values: Mapping[str, str]) -> str:
    def repl(match: re.Match[str]) -> str:
        inner = match.group(1)
        if inner not in values:
            raise UnknownPlaceholder(inner)
        return values[inner]

    return _PLACEHOLDER_RE.sub(repl, text)


def bind_parameters(
    container: Mapping[str, Any], doc: DarpalDocument, sel: ParameterSelection
) -> BoundWorkflow:
    """Merge a parameter selection into the container's workflow.

    Every `{{param.*}}` placeholder is replaced by the selection value; blocks
    are never added, removed, or reordered. The result is pinned to the source
    document via its hash.
    """
    engine = container.get("automationEngine")
    if engine != ENGINE_ID:
        raise EngineMismatch(f"cannot bind for engine {engine!r} (expected {ENGINE_ID})")
    report = validate_workflow(container)
    if not report.valid:
        raise ValueError(
            "workflow fails validation: "
            + "; ".join(f.render() for f in report.errors)
        )
    check_selection(doc, sel)

    values = _substitution_values(sel)
    blocks = []
    for raw in container.get("workflow", []):
        block = WorkflowBlock.from_mapping(raw)
        replaced = {}
        if isinstance(block.value, str):
            replaced["value"] = _substitute(block.value, values)
        if isinstance(block.url, str):
            replaced["url"] = _substitute(block.url, values)
        if replaced:
            block = WorkflowBlock(
                id=block.id,
                kind=block.kind,
                selector=block.selector,
                value=replaced.get("value", block.value),
                signal=block.signal,
                url=replaced.get("url", block.url),
                timeout_ms=block.timeout_ms,
                on_missing=block.on_missing,
            )
        for text in (block.value, block.url):
            if isinstance(text, str) and "{{" in text:
                raise UnknownPlaceholder(text)
        blocks.append(block)

    return BoundWorkflow(
        blocks=tuple(blocks),
        provider=normalize_provider_name(doc.name),
        source_hash=compute_hash(doc),
        start_url=doc.start_url,
    )
