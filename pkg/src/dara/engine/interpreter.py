"""Reference interpreter: runs block semantics against scripted page snapshots.

This is the engine's equivalence oracle. It shares no code with the live
runner beyond the data types: pages are in-memory scripts, time is a logical
millisecond clock, and the result is a pure function of (workflow, model).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Mapping

from ..signals import (
    ERROR,
    INTERACTION_REQUIRED,
    STARTED,
    SUCCESS,
    ExecutionResult,
    ExecutionSignal,
)
from ..workflow import BoundWorkflow

_GATE_KINDS = frozenset({"assert-url", "wait-for-element"})
_EPOCH = datetime(2000, 1, 1, tzinfo=timezone.utc)
_MAX_REDIRECTS = 10


@dataclass(frozen=True)
class ScriptedElement:
    """One resolvable element on a scripted page, keyed by selector expression."""

    appear_after_ms: int = 0
    clicks_to: str | None = None  # URL a click/submit on this element loads


@dataclass(frozen=True)
class ScriptedPage:
    url: str
    elements: Mapping[str, ScriptedElement] = field(default_factory=dict)
    load_delay_ms: int = 0


@dataclass(frozen=True)
class PageModel:
    """Scripted DOM snapshots for every URL a run may touch."""

    pages: Mapping[str, ScriptedPage]
    redirects: Mapping[str, str] = field(default_factory=dict)


class _ModelRun:
    def __init__(self, model: PageModel, page_timeout_ms: int, element_timeout_ms: int):
        self.model = model
        self.page_timeout_ms = page_timeout_ms
        self.element_timeout_ms = element_timeout_ms
        self.clock_ms = 0
        self.page: ScriptedPage | None = None
        self.current_url = ""

    def navigate(self, url: str) -> str | None:
        """Load `url`, following scripted redirects. Returns an error detail or None."""
        seen = 0
        while url in self.model.redirects:
            url = self.model.redirects[url]
            seen += 1
            if seen > _MAX_REDIRECTS:
                return f"redirect limit exceeded at {url}"
        page = self.model.pages.get(url)
        if page is None:
            return f"no page at {url}"
        if page.load_delay_ms > self.page_timeout_ms:
            self.clock_ms += self.page_timeout_ms
            return f"page load timed out after {self.page_timeout_ms} ms"
        self.clock_ms += page.load_delay_ms
        self.page = page
        self.current_url = url
        return None

    def lookup(self, expression: str, timeout_ms: int) -> bool:
        element = (self.page.elements if self.page else {}).get(expression)
        if element is None or element.appear_after_ms > timeout_ms:
            self.clock_ms += timeout_ms
            return False
        self.clock_ms += element.appear_after_ms
        return True

    def element(self, expression: str) -> ScriptedElement | None:
        return (self.page.elements if self.page else {}).get(expression)


def reference_interpret(
    workflow: BoundWorkflow,
    page_model: PageModel,
    *,
    page_timeout_ms: int = 30_000,
    element_timeout_ms: int = 10_000,
    run_ceiling_ms: int = 120_000,
    run_id: str = "model-run",
) -> ExecutionResult:
    """Execute the workflow against scripted snapshots, no network involved."""
    run = _ModelRun(page_model, page_timeout_ms, element_timeout_ms)
    lifecycle: list[ExecutionSignal] = []
    trace: list[str] = []

    def fire(kind: str, block_id: str | None = None, detail: str = "") -> None:
        stamp = _EPOCH + timedelta(milliseconds=run.clock_ms)
        lifecycle.append(ExecutionSignal(run_id, kind, block_id, stamp, detail))

    def result(outcome: str, failed_block: str | None = None) -> ExecutionResult:
        return ExecutionResult(
            run_id=run_id,
            provider=workflow.provider,
            outcome=outcome,
            failed_block=failed_block,
            signals=tuple(lifecycle),
            duration_ms=run.clock_ms,
            trace=tuple(trace),
        )

    blocks = workflow.blocks
    index_of = {block.id: i for i, block in enumerate(blocks)}
    has_gate = any(block.kind in _GATE_KINDS for block in blocks)

    failure = run.navigate(workflow.start_url)
    if failure is not None:
        fire(ERROR, detail=failure)
        return result(ERROR)

    started = False
    if not has_gate:
        fire(STARTED, detail="start page loaded")
        started = True

    i = 0
    while i < len(blocks):
        block = blocks[i]
        if run.clock_ms > run_ceiling_ms:
            fire(INTERACTION_REQUIRED, block.id, f"run exceeded {run_ceiling_ms} ms ceiling")
            return result(INTERACTION_REQUIRED, block.id)
        trace.append(block.id)

        status = "ok"
        detail = ""
        if block.kind == "navigate":
            failure = run.navigate(block.url or "")
            if failure is not None:
                fire(ERROR, block.id, failure)
                return result(ERROR, block.id)
        elif block.kind == "assert-url":
            if not run.current_url.startswith(block.url or ""):
                status, detail = "missing", f"current url is {run.current_url!r}"
        elif block.kind == "emit-signal":
            pass  # progress signals stay outside the lifecycle sequence
        elif block.kind == "delay":
            run.clock_ms += block.timeout_ms or 0
        elif block.kind == "branch-on-element":
            expr = block.selector.expression if block.selector else ""
            if not run.lookup(expr, block.timeout_ms or 0):
                status = "branch"
        elif block.kind in ("wait-for-element", "click", "fill-field", "select-option", "submit"):
            expr = block.selector.expression if block.selector else ""
            timeout = block.timeout_ms if block.timeout_ms is not None else element_timeout_ms
            if not run.lookup(expr, timeout):
                status, detail = "missing", f"no element for {expr!r}"
            elif block.kind in ("click", "submit"):
                element = run.element(expr)
                if element is not None and element.clicks_to:
                    failure = run.navigate(element.clicks_to)
                    if failure is not None:
                        status, detail = "failed", failure
        else:
            status, detail = "failed", f"unknown block kind {block.kind!r}"

        if status == "ok":
            if not started and block.kind in _GATE_KINDS:
                fire(STARTED, block.id, "start page confirmed")
                started = True
            i += 1
            continue
        if status == "branch":
            i = index_of[block.on_missing]
            continue
        fire(INTERACTION_REQUIRED, block.id, detail)
        return result(INTERACTION_REQUIRED, block.id)

    fire(SUCCESS, detail="all blocks completed")
    return result(SUCCESS)
