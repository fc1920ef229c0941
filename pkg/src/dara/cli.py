"""Operator command line.

Exit codes form a fixed mapping, documented per command:

    0  success
    1  validation findings with error severity (`validate`)
    2  unreadable or unparsable document
    3  run ended in interaction-required
    4  run ended in error (or the document was unusable)
    5  repository unreachable
    6  browser-control server unreachable
    7  requested port already in use
"""

from __future__ import annotations

import json
import os
import signal as os_signal
import sys
import threading
from datetime import date
from pathlib import Path

import click

from . import __version__
from .document import (
    parse_document,
    serialize_document,
    validate_document,
    verify_hash,
    with_embedded_hash,
)
from .errors import DaraError, DocumentSyntaxError, PortInUse, StructureError
from .pipeline import (
    BrowserUnreachable,
    DocumentUnusable,
    RunRequest,
    SeedCookie,
    run_drp,
)
from .repository.client import RepositoryError, RepositoryUnreachable
from .signals import ExecutionSignal
from .workflow import ParameterSelection

EXIT_INVALID = 1
EXIT_UNREADABLE = 2
EXIT_INTERACTION = 3
EXIT_ERROR = 4
EXIT_NO_REPO = 5
EXIT_NO_BROWSER = 6
EXIT_PORT_IN_USE = 7


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Automate data subject access requests from DARPAL documents."""


# --- document commands ----------------------------------------------------------


@main.command("validate")
@click.argument("paths", nargs=-1, required=True, type=click.Path(path_type=Path))
def cmd_validate(paths: tuple[Path, ...]) -> None:
    """Validate documents; exit 0 only when all are valid."""
    any_invalid = False
    for path in paths:
        try:
            doc = parse_document(path.read_bytes())
        except OSError as exc:
            click.echo(f"{path}: error: unreadable ({exc.strerror})")
            sys.exit(EXIT_UNREADABLE)
        except (DocumentSyntaxError, StructureError) as exc:
            click.echo(f"{path}: error: {exc}")
            sys.exit(EXIT_UNREADABLE)
        report = validate_document(doc)
        for finding in report.findings:
            click.echo(f"{path}: {finding.render()}")
        if not report.valid:
            any_invalid = True
    sys.exit(EXIT_INVALID if any_invalid else 0)


@main.command("hash")
@click.argument("path", type=click.Path(path_type=Path))
@click.option("--write", is_flag=True, help="Embed the digest into meta._hash in place.")
def cmd_hash(path: Path, write: bool) -> None:
    """Print the document's canonical SHA-256 digest."""
    try:
        doc = parse_document(path.read_bytes())
    except OSError as exc:
        click.echo(f"{path}: error: unreadable ({exc.strerror})", err=True)
        sys.exit(EXIT_UNREADABLE)
    except (DocumentSyntaxError, StructureError) as exc:
        click.echo(f"{path}: error: {exc}", err=True)
        sys.exit(EXIT_UNREADABLE)
    try:
        hashed = with_embedded_hash(doc)
    except DaraError as exc:
        click.echo(f"{path}: error: {exc}", err=True)
        sys.exit(EXIT_UNREADABLE)
    click.echo(hashed.embedded_hash)
    if write and hashed.data != doc.data:
        path.write_text(serialize_document(hashed), encoding="utf-8")


# --- run ------------------------------------------------------------------------


def _parse_time_range(value: str) -> tuple[bool, date | None, date | None]:
    if value == "all":
        return True, None, None
    if ".." in value:
        start_s, end_s = value.split("..", 1)
        return False, date.fromisoformat(start_s), date.fromisoformat(end_s)
    raise click.BadParameter("expected 'all' or START..END (ISO dates)")


def _parse_cookie(value: str) -> SeedCookie:
    try:
        pair, domain = value.rsplit("@", 1)
        name, cookie_value = pair.split("=", 1)
    except ValueError:
        raise click.BadParameter("expected NAME=VALUE@DOMAIN")
    return SeedCookie(name, cookie_value, domain)


@main.command("run")
@click.option("--provider", required=True, help="Normalized provider name in the repository.")
@click.option("--repo", "repo_url", envvar="DARA_REPO", required=True, help="Repository base URL.")
@click.option("--browser", "browser_url", envvar="DARA_BROWSER", required=True,
              help="W3C browser-control server URL.")
@click.option("--time-range", default="all", show_default=True, help="'all' or START..END.")
@click.option("--format", "data_format", required=True, help="Requested data format identifier.")
@click.option("--quality", default=None, help="Requested media quality identifier.")
@click.option("--extra", "extras", multiple=True, help="Additional parameter choice KEY=VALUE.")
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None,
              help="Write the run result record to this file.")
@click.option("--seed-cookie", "seed_cookies", multiple=True,
              help="Pre-establish a session cookie, NAME=VALUE@DOMAIN (e.g. for the sandbox).")
@click.option("--pretty", is_flag=True, help="Also render signals human-readably on stderr.")
@click.option("--ceiling-ms", default=120_000, show_default=True,
              help="Whole-run ceiling before interaction-required is assumed.")
def cmd_run(provider: str, repo_url: str, browser_url: str, time_range: str, data_format: str,
            quality: str | None, extras: tuple[str, ...], out_path: Path | None,
            seed_cookies: tuple[str, ...], pretty: bool, ceiling_ms: int) -> None:
    """Fetch, bind, and execute one provider's request workflow.

    Signals stream to stdout as newline-delimited JSON under all outcomes.
    """
    all_time, start, end = _parse_time_range(time_range)
    extra_map = {}
    for item in extras:
        if "=" not in item:
            raise click.BadParameter(f"--extra needs KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        extra_map[key] = value
    try:
        selection = ParameterSelection(
            data_format=data_format,
            all_time=all_time,
            start=start,
            end=end,
            media_quality=quality,
            extras=extra_map,
        )
    except ValueError as exc:
        raise click.BadParameter(str(exc))

    def emit(event) -> None:
        click.echo(event.to_json_line())
        if pretty:
            wire = event.to_wire()
            block = f" [{wire['blockId']}]" if wire.get("blockId") else ""
            label = wire.get("signal") or wire["kind"]
            click.echo(f"  {wire['timestamp']}  {label}{block}  {wire['detail']}", err=True)

    request = RunRequest(
        provider=provider,
        selection=selection,
        repository_url=repo_url,
        browser_url=browser_url,
        cookies=tuple(_parse_cookie(c) for c in seed_cookies),
        run_ceiling_ms=ceiling_ms,
    )
    try:
        result = run_drp(request, emit)
    except RepositoryUnreachable as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_NO_REPO)
    except BrowserUnreachable as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_NO_BROWSER)
    except (RepositoryError, DocumentUnusable, DaraError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)

    if out_path is not None:
        out_path.write_text(json.dumps(result.to_wire(), indent=2) + "\n", encoding="utf-8")
    sys.exit({"success": 0, "interaction-required": EXIT_INTERACTION}.get(result.outcome, EXIT_ERROR))


# --- long-running services --------------------------------------------------------


def _wait_forever() -> None:
    stop = threading.Event()
    for sig in (os_signal.SIGINT, os_signal.SIGTERM):
        os_signal.signal(sig, lambda *_: stop.set())
    stop.wait()


@main.command("sandbox")
@click.option("--port", default=8091, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--scenario", "names", multiple=True,
              help="Serve only these built-in scenarios (default: all).")
def cmd_sandbox(port: int, host: str, names: tuple[str, ...]) -> None:
    """Serve the mock provider site until interrupted."""
    from .sandbox import BUILTIN_SCENARIOS, scenario_by_name, serve

    try:
        chosen = [scenario_by_name(n) for n in names] if names else list(BUILTIN_SCENARIOS)
    except KeyError as exc:
        raise click.BadParameter(f"unknown scenario {exc.args[0]!r}")
    try:
        handle = serve(chosen, port=port, host=host)
    except PortInUse as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_PORT_IN_USE)
    click.echo(f"sandbox provider on {handle.base_url} "
               f"(scenarios: {', '.join(s.name for s in chosen)})")
    try:
        _wait_forever()
    finally:
        handle.stop()


@main.command("minidriver")
@click.option("--port", default=8092, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def cmd_minidriver(port: int, host: str) -> None:
    """Serve the bundled W3C browser-control stub until interrupted."""
    from .minidriver import serve

    try:
        handle = serve(port=port, host=host)
    except PortInUse as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_PORT_IN_USE)
    click.echo(f"minidriver on {handle.url}")
    try:
        _wait_forever()
    finally:
        handle.stop()


@main.command("serve-repo")
@click.option("--store", "store_dir", required=True, type=click.Path(path_type=Path))
@click.option("--port", default=8090, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--seed", "seed_dir", type=click.Path(path_type=Path), default=None,
              help="Seed the store from a directory of *.darpal.json files first.")
def cmd_serve_repo(store_dir: Path, port: int, host: str, seed_dir: Path | None) -> None:
    """Serve the process repository until interrupted."""
    import socket

    import uvicorn

    from .repository import DocumentStore, create_app

    if seed_dir is not None:
        stored = DocumentStore(store_dir).seed_from_directory(seed_dir)
        click.echo(f"seeded {len(stored)} document(s) from {seed_dir}")

    with socket.socket() as probe:
        try:
            probe.bind((host, port))
        except OSError:
            click.echo(f"error: port {port} is already in use", err=True)
            sys.exit(EXIT_PORT_IN_USE)

    app = create_app(store_dir)
    click.echo(f"process repository on http://{host}:{port} (store: {store_dir})")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("bridge")
@click.option("--repo", "repo_url", envvar="DARA_REPO", required=True)
@click.option("--browser", "browser_url", envvar="DARA_BROWSER", required=True)
@click.option("--port", default=8093, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(path_type=Path), default=None,
              help="Serve a built dashboard from this directory at /.")
def cmd_bridge(repo_url: str, browser_url: str, port: int, host: str, ui_dir: Path | None) -> None:
    """Serve the dashboard bridge (run trigger + signal re-streaming)."""
    import socket

    import uvicorn

    from .bridge import create_bridge_app

    with socket.socket() as probe:
        try:
            probe.bind((host, port))
        except OSError:
            click.echo(f"error: port {port} is already in use", err=True)
            sys.exit(EXIT_PORT_IN_USE)

    app = create_bridge_app(repo_url, browser_url, ui_dir=ui_dir)
    click.echo(f"engine bridge on http://{host}:{port} (repo: {repo_url}, browser: {browser_url})")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("sandbox-doc")
@click.option("--base", "base_url", required=True, help="Base URL of a running sandbox.")
@click.option("--scenario", "name", default="happy-path", show_default=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None)
def cmd_sandbox_doc(base_url: str, name: str, out_path: Path | None) -> None:
    """Emit the DARPAL document for a sandbox scenario (hash embedded)."""
    from .sandbox import document_for, scenario_by_name

    try:
        scenario = scenario_by_name(name)
    except KeyError:
        raise click.BadParameter(f"unknown scenario {name!r}")
    text = serialize_document(document_for(scenario, base_url))
    if out_path is not None:
        out_path.write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
