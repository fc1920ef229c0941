"""Exception types shared across the dara packages."""

from __future__ import annotations


class DaraError(Exception):
    """Base class for all dara-specific errors."""


# --- document layer ---------------------------------------------------------

class DocumentSyntaxError(DaraError):
    """Input is not well-formed JSON. Carries 1-based line/column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class StructureError(DaraError):
    """A mandatory top-level section is missing or the input is not an object."""


class NotValidatedError(DaraError):
    """Operation requires a document that validates without errors."""

    def __init__(self, report):
        errors = [f for f in report.findings if f.severity == "error"]
        summary = "; ".join(f"{f.path}: {f.message}" for f in errors[:5])
        super().__init__(f"document fails validation ({len(errors)} error(s)): {summary}")
        self.report = report


# --- workflow binding -------------------------------------------------------

class EngineMismatch(DaraError):
    """Workflow container targets a different automation engine."""


class UnknownPlaceholder(DaraError):
    """A template references a parameter path the document does not declare."""

    def __init__(self, path: str):
        super().__init__(f"unknown placeholder {{{{{path}}}}}")
        self.path = path


class SelectionOutOfRange(DaraError):
    """A selection value is outside the document's declared option set."""

    def __init__(self, field: str, detail: str = ""):
        message = f"selection out of range for {field}"
        if detail:
            message += f": {detail}"
        super().__init__(message)
        self.field = field


# --- execution engine -------------------------------------------------------

class SessionLost(DaraError):
    """The browser-control server connection dropped or never came up."""


class NavigationFailed(DaraError):
    """Page navigation could not be completed."""

    def __init__(self, url: str, detail: str = ""):
        super().__init__(f"navigation to {url} failed" + (f": {detail}" if detail else ""))
        self.url = url


class ProtocolError(DaraError):
    """The browser-control server returned a malformed response."""


# --- servers -----------------------------------------------------------------

class PortInUse(DaraError):
    """Requested TCP port is already bound."""

    def __init__(self, port: int):
        super().__init__(f"port {port} is already in use")
        self.port = port
