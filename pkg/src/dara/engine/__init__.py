"""Workflow execution: W3C wire-protocol browser client, runner, and the
in-memory reference interpreter used as its equivalence oracle."""

from .wire import BrowserSession
from .runner import execute, step, StepOutcome, RUN_CEILING_MS
from .interpreter import (
    PageModel,
    ScriptedElement,
    ScriptedPage,
    reference_interpret,
)

__all__ = [
    "BrowserSession",
    "execute",
    "step",
    "StepOutcome",
    "RUN_CEILING_MS",
    "PageModel",
    "ScriptedElement",
    "ScriptedPage",
    "reference_interpret",
]
