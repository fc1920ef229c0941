"""Run orchestration: fetch document, bind parameters, execute, report back.

Shared by the CLI's `run` command and the dashboard bridge so both paths have
identical semantics. Fail-fast ordering: the repository is consulted before
any browser session is opened.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from . import __version__
from .document import validate_document, verify_hash
from .engine import BrowserSession, execute, RUN_CEILING_MS
from .errors import DaraError, SessionLost
from .repository.client import RepositoryClient, RepositoryError, RepositoryUnreachable
from .signals import SignalSink
from .workflow import ENGINE_ID, ParameterSelection, bind_parameters

logger = logging.getLogger(__name__)

ENGINE_VERSION = f"{ENGINE_ID} dara/{__version__}"


class BrowserUnreachable(DaraError):
    """The browser-control server could not provide a session."""


class DocumentUnusable(DaraError):
    """The fetched document cannot be executed (invalid, bad hash, no workflow)."""


@dataclass(frozen=True)
class SeedCookie:
    name: str
    value: str
    domain: str


@dataclass(frozen=True)
class RunRequest:
    provider: str
    selection: ParameterSelection
    repository_url: str
    browser_url: str
    cookies: tuple[SeedCookie, ...] = field(default_factory=tuple)
    page_timeout_ms: int = 30_000
    element_timeout_ms: int = 10_000
    run_ceiling_ms: int = RUN_CEILING_MS


def run_drp(request: RunRequest, emit: SignalSink):
    """Execute one data request process end to end.

    Raises RepositoryUnreachable / RepositoryError / DocumentUnusable /
    BrowserUnreachable before any signal is emitted; afterwards the outcome is
    carried in the returned ExecutionResult.
    """
    repo = RepositoryClient(request.repository_url)
    doc = repo.get_document(request.provider)

    report = validate_document(doc)
    if not report.valid:
        raise DocumentUnusable(
            "document fails validation: " + "; ".join(f.render() for f in report.errors[:5])
        )
    if not verify_hash(doc):
        raise DocumentUnusable("document hash does not verify; refusing to execute")
    container = doc.workflow_container
    if container is None or not doc.webinterface.get("available"):
        raise DocumentUnusable("document has no executable web-interface workflow")

    workflow = bind_parameters(container, doc, request.selection)

    session = BrowserSession(
        request.browser_url,
        page_timeout_ms=request.page_timeout_ms,
        element_timeout_ms=request.element_timeout_ms,
    )
    try:
        session.open()
    except (SessionLost, DaraError) as exc:
        raise BrowserUnreachable(str(exc)) from exc
    for cookie in request.cookies:
        session.add_cookie(cookie.name, cookie.value, domain=cookie.domain)

    result = execute(workflow, session, emit, run_ceiling_ms=request.run_ceiling_ms)

    if result.outcome == "success":
        session.quit()
    # interaction-required leaves the page (and session) open for the human.

    try:
        repo.post_report(request.provider, result.outcome, ENGINE_VERSION)
    except (RepositoryUnreachable, RepositoryError) as exc:
        logger.warning("could not report execution outcome: %s", exc)

    return result
