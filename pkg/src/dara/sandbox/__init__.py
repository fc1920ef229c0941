"""Configurable mock service provider for reproducible end-to-end DRP runs."""

from .scenarios import (
    BUILTIN_SCENARIOS,
    FormField,
    Scenario,
    document_for,
    page_model_for,
    scenario_by_name,
)
from .server import SandboxHandle, serve

__all__ = [
    "BUILTIN_SCENARIOS",
    "FormField",
    "Scenario",
    "SandboxHandle",
    "document_for",
    "page_model_for",
    "scenario_by_name",
    "serve",
]
