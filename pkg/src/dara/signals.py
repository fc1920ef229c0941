"""Lifecycle signals and run results.

Every run's lifecycle signal sequence matches the grammar

    started-execution? (success | interaction-required | error)

`started-execution` may be absent only when the start page itself fails
(navigation error, or redirect away detected by the workflow's gate block).
Workflow-authored `emit-signal` blocks produce progress events that share the
wire format (kind "progress") but stay outside the lifecycle sequence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Union

STARTED = "started-execution"
SUCCESS = "success"
INTERACTION_REQUIRED = "interaction-required"
ERROR = "error"

LIFECYCLE_KINDS = (STARTED, SUCCESS, INTERACTION_REQUIRED, ERROR)
TERMINAL_KINDS = (SUCCESS, INTERACTION_REQUIRED, ERROR)


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class ExecutionSignal:
    run_id: str
    kind: str
    block_id: str | None
    timestamp: datetime
    detail: str = ""

    def __post_init__(self) -> None:
        if self.kind not in LIFECYCLE_KINDS:
            raise ValueError(f"not a lifecycle signal kind: {self.kind!r}")

    def to_wire(self) -> dict:
        return {
            "runId": self.run_id,
            "kind": self.kind,
            "blockId": self.block_id,
            "timestamp": self.timestamp.isoformat(),
            "detail": self.detail,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_wire(), ensure_ascii=False)


@dataclass(frozen=True)
class ProgressSignal:
    """A workflow-authored signal forwarded by an emit-signal block."""

    run_id: str
    name: str
    block_id: str | None
    timestamp: datetime

    def to_wire(self) -> dict:
        return {
            "runId": self.run_id,
            "kind": "progress",
            "signal": self.name,
            "blockId": self.block_id,
            "timestamp": self.timestamp.isoformat(),
            "detail": "",
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_wire(), ensure_ascii=False)


RunEvent = Union[ExecutionSignal, ProgressSignal]
SignalSink = Callable[[RunEvent], None]


@dataclass(frozen=True)
class ExecutionResult:
    run_id: str
    provider: str
    outcome: str  # success | interaction-required | error
    failed_block: str | None
    signals: tuple[ExecutionSignal, ...]
    duration_ms: int
    trace: tuple[str, ...]  # executed block ids, in order

    def to_wire(self) -> dict:
        return {
            "runId": self.run_id,
            "provider": self.provider,
            "outcome": self.outcome,
            "failedBlock": self.failed_block,
            "signals": [s.to_wire() for s in self.signals],
            "durationMs": self.duration_ms,
            "trace": list(self.trace),
        }


def check_signal_grammar(signals: tuple[ExecutionSignal, ...] | list[ExecutionSignal]) -> bool:
    """True iff the sequence matches `started-execution? terminal`."""
    kinds = [s.kind for s in signals]
    if len(kinds) == 1:
        return kinds[0] in TERMINAL_KINDS
    if len(kinds) == 2:
        return kinds[0] == STARTED and kinds[1] in TERMINAL_KINDS
    return False
