"""Workflow runner: drives a bound workflow over a live browser session.

The start page is loaded as the implicit first action. `started-execution` is
emitted once the page is confirmed (the first assert-url or wait-for-element
block succeeding), so a redirect to a login portal never reports a started
run. A block that cannot complete leaves the page open and surfaces
`interaction-required`: the engine never dismisses dialogs or retries beyond
the declared timeout. Control-server loss and navigation failures are
non-recoverable and surface as `error`.
"""

from __future__ import annotations

import logging
import time
import uuid
from dataclasses import dataclass

from ..errors import NavigationFailed, ProtocolError, SessionLost
from ..signals import (
    ERROR,
    INTERACTION_REQUIRED,
    STARTED,
    SUCCESS,
    ExecutionResult,
    ExecutionSignal,
    ProgressSignal,
    SignalSink,
    utcnow,
)
from ..workflow import BoundWorkflow, WorkflowBlock
from .wire import BrowserSession, _StepFailure

logger = logging.getLogger(__name__)

RUN_CEILING_MS = 120_000
_POLL_INTERVAL_S = 0.1

# Blocks that confirm the start page actually shows the expected flow.
GATE_KINDS = frozenset({"assert-url", "wait-for-element"})

OK = "ok"
MISSING = "missing-element"
FAILED = "failed"


@dataclass(frozen=True)
class StepOutcome:
    status: str  # ok | missing-element | failed
    detail: str = ""


def _resolve(session: BrowserSession, block: WorkflowBlock, *, poll: bool) -> str | None:
    """Find the block's element, polling until its timeout when `poll`."""
    assert block.selector is not None
    timeout_ms = block.timeout_ms if block.timeout_ms is not None else session.element_timeout_ms
    deadline = time.monotonic() + (timeout_ms / 1000 if poll else 0)
    while True:
        element = session.find_element(block.selector.strategy, block.selector.expression)
        if element is not None:
            return element
        if time.monotonic() >= deadline:
            return None
        time.sleep(_POLL_INTERVAL_S)


def step(
    session: BrowserSession,
    block: WorkflowBlock,
    *,
    run_id: str = "",
    emit: SignalSink | None = None,
) -> StepOutcome:
    """Execute one block against the session's live page."""
    try:
        if block.kind == "navigate":
            session.navigate(block.url or "")
            return StepOutcome(OK)

        if block.kind == "assert-url":
            current = session.current_url()
            if current.startswith(block.url or ""):
                return StepOutcome(OK)
            return StepOutcome(MISSING, f"current url {current!r} does not start with {block.url!r}")

        if block.kind == "emit-signal":
            if emit is not None:
                emit(ProgressSignal(run_id, block.signal or "", block.id, utcnow()))
            return StepOutcome(OK)

        if block.kind == "delay":
            time.sleep((block.timeout_ms or 0) / 1000)
            return StepOutcome(OK)

        if block.kind == "branch-on-element":
            element = _resolve(session, block, poll=block.timeout_ms is not None)
            if element is None:
                return StepOutcome(MISSING, "element absent; branching")
            return StepOutcome(OK)

        if block.kind in ("wait-for-element", "click", "fill-field", "select-option"):
            element = _resolve(session, block, poll=True)
            if element is None:
                return StepOutcome(
                    MISSING, f"no element for {block.selector.strategy} {block.selector.expression!r}"
                )
            if block.kind == "click":
                session.click(element)
            elif block.kind == "fill-field":
                session.clear(element)
                session.send_keys(element, block.value or "")
            elif block.kind == "select-option":
                option = _find_option(session, element, block.value or "")
                if option is None:
                    return StepOutcome(MISSING, f"no option {block.value!r} in select")
                session.click(option)
            return StepOutcome(OK)

        if block.kind == "submit":
            if block.selector is None:
                return StepOutcome(FAILED, "submit block carries no selector")
            element = _resolve(session, block, poll=True)
            if element is None:
                return StepOutcome(
                    MISSING, f"no element for {block.selector.strategy} {block.selector.expression!r}"
                )
            session.click(element)
            return StepOutcome(OK)

        return StepOutcome(FAILED, f"unknown block kind {block.kind!r}")
    except _StepFailure as exc:
        return StepOutcome(FAILED, str(exc))


def _find_option(session: BrowserSession, select_id: str, wanted: str) -> str | None:
    by_value = session.find_element(
        "xpath", f".//option[@value={_xpath_literal(wanted)}]", root=select_id
    )
    if by_value is not None:
        return by_value
    return session.find_element(
        "xpath", f".//option[normalize-space(text())={_xpath_literal(wanted)}]", root=select_id
    )


def _xpath_literal(value: str) -> str:
    if "'" not in value:
        return f"'{value}'"
    if '"' not in value:
        return f'"{value}"'
    parts = value.split("'")
    return "concat(" + ", \"'\", ".join(f"'{p}'" for p in parts) + ")"


def execute(
    workflow: BoundWorkflow,
    session: BrowserSession,
    emit: SignalSink,
    *,
    run_ceiling_ms: int = RUN_CEILING_MS,
    run_id: str | None = None,
) -> ExecutionResult:
    """Run all blocks in order, emitting lifecycle signals to `emit`.

    Returns the terminal result; on success the page is closed, on
    interaction-required it stays open for the human to take over.
    """
    run_id = run_id or uuid.uuid4().hex[:12]
    started_at = time.monotonic()
    lifecycle: list[ExecutionSignal] = []
    trace: list[str] = []

    def fire(kind: str, block_id: str | None = None, detail: str = "") -> None:
        signal = ExecutionSignal(run_id, kind, block_id, utcnow(), detail)
        lifecycle.append(signal)
        emit(signal)

    def result(outcome: str, failed_block: str | None = None) -> ExecutionResult:
        return ExecutionResult(
            run_id=run_id,
            provider=workflow.provider,
            outcome=outcome,
            failed_block=failed_block,
            signals=tuple(lifecycle),
            duration_ms=int((time.monotonic() - started_at) * 1000),
            trace=tuple(trace),
        )

    blocks = workflow.blocks
    index_of = {block.id: i for i, block in enumerate(blocks)}
    has_gate = any(block.kind in GATE_KINDS for block in blocks)

    try:
        session.navigate(workflow.start_url)
    except NavigationFailed as exc:
        fire(ERROR, detail=str(exc))
        return result(ERROR)
    except SessionLost as exc:
        fire(ERROR, detail=str(exc))
        return result(ERROR)

    started = False
    if not has_gate:
        fire(STARTED, detail="start page loaded")
        started = True

    i = 0
    while i < len(blocks):
        elapsed_ms = (time.monotonic() - started_at) * 1000
        block = blocks[i]
        if elapsed_ms > run_ceiling_ms:
            fire(INTERACTION_REQUIRED, block.id, f"run exceeded {run_ceiling_ms} ms ceiling")
            return result(INTERACTION_REQUIRED, block.id)

        trace.append(block.id)
        try:
            outcome = step(session, block, run_id=run_id, emit=emit)
        except (SessionLost, ProtocolError) as exc:
            fire(ERROR, block.id, str(exc))
            return result(ERROR, block.id)
        except NavigationFailed as exc:
            fire(ERROR, block.id, str(exc))
            return result(ERROR, block.id)

        if outcome.status == OK:
            if not started and block.kind in GATE_KINDS:
                fire(STARTED, block.id, "start page confirmed")
                started = True
            i += 1
            continue

        if outcome.status == MISSING and block.kind == "branch-on-element":
            i = index_of[block.on_missing]  # forward jump, enforced at validation
            continue

        # Recoverable: a human can finish the flow in the open page.
        fire(INTERACTION_REQUIRED, block.id, outcome.detail)
        return result(INTERACTION_REQUIRED, block.id)

    fire(SUCCESS, detail="all blocks completed")
    try:
        session.close_window()
    except (SessionLost, ProtocolError):
        logger.debug("could not close window after success", exc_info=True)
    return result(SUCCESS)
