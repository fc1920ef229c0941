"""Engine bridge: a thin local HTTP endpoint the dashboard talks to.

Forwards run requests to the pipeline and re-streams each run's signals as
server-sent events, so the browser page never speaks to the browser-control
server directly.

    POST /runs                  start a run, returns {"runId": ...}
    GET  /runs                  run summaries, newest first
    GET  /runs/{id}             one summary
    GET  /runs/{id}/events      SSE stream: buffered events, then live ones
    POST /runs/{id}/ack         acknowledge an interaction-required run
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse

from .pipeline import RunRequest, SeedCookie, run_drp
from .workflow import ParameterSelection

logger = logging.getLogger(__name__)

_STREAM_POLL_S = 0.2


@dataclass
class _Run:
    run_id: str
    provider: str
    events: list[dict] = field(default_factory=list)
    outcome: str | None = None
    acknowledged: bool = False
    error: str | None = None
    cond: threading.Condition = field(default_factory=threading.Condition)

    def append(self, event: dict) -> None:
        with self.cond:
            self.events.append(event)
            self.cond.notify_all()

    def finish(self, outcome: str | None, error: str | None = None) -> None:
        with self.cond:
            self.outcome = outcome
            self.error = error
            self.cond.notify_all()

    def summary(self) -> dict:
        with self.cond:
            return {
                "runId": self.run_id,
                "provider": self.provider,
                "outcome": self.outcome,
                "acknowledged": self.acknowledged,
                "error": self.error,
                "events": len(self.events),
            }


def _selection_from_payload(payload: dict) -> ParameterSelection:
    time_range = payload.get("timeRange", "all")
    if time_range == "all":
        all_time, start, end = True, None, None
    elif isinstance(time_range, dict):
        all_time = False
        start = date.fromisoformat(time_range["start"])
        end = date.fromisoformat(time_range["end"])
    elif isinstance(time_range, str) and ".." in time_range:
        all_time = False
        start_s, end_s = time_range.split("..", 1)
        start, end = date.fromisoformat(start_s), date.fromisoformat(end_s)
    else:
        raise ValueError(f"bad timeRange {time_range!r}")
    return ParameterSelection(
        data_format=str(payload["dataFormat"]),
        all_time=all_time,
        start=start,
        end=end,
        media_quality=payload.get("mediaQuality"),
        extras={str(k): str(v) for k, v in (payload.get("extras") or {}).items()},
    )


def create_bridge_app(repo_url: str, browser_url: str, *, ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="dara engine bridge", version="1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    runs: dict[str, _Run] = {}
    runs_lock = threading.Lock()
    app.state.repo_url = repo_url
    app.state.browser_url = browser_url

    def _error(status: int, code: str, detail: str) -> Response:
        return Response(
            json.dumps({"error": code, "detail": detail}),
            status_code=status,
            media_type="application/json; charset=utf-8",
        )

    def _get_run(run_id: str) -> _Run | None:
        with runs_lock:
            return runs.get(run_id)

    @app.post("/runs")
    async def start_run(request: Request) -> Response:
        try:
            payload = await request.json()
            provider = str(payload["provider"])
            selection = _selection_from_payload(payload)
        except (ValueError, KeyError) as exc:
            return _error(422, "bad-request", f"cannot parse run request: {exc}")
        cookies = tuple(
            SeedCookie(str(c["name"]), str(c["value"]), str(c["domain"]))
            for c in payload.get("cookies") or []
        )
        run = _Run(run_id=uuid.uuid4().hex[:12], provider=provider)
        with runs_lock:
            runs[run.run_id] = run

        run_request = RunRequest(
            provider=provider,
            selection=selection,
            repository_url=repo_url,
            browser_url=browser_url,
            cookies=cookies,
            run_ceiling_ms=int(payload.get("ceilingMs", 120_000)),
        )

        def worker() -> None:
            try:
                result = run_drp(run_request, lambda ev: run.append(ev.to_wire()),)
                run.finish(result.outcome)
            except Exception as exc:  # surfaced to the dashboard as failed
                logger.warning("bridge run %s failed: %s", run.run_id, exc)
                run.append(
                    {
                        "runId": run.run_id,
                        "kind": "error",
                        "blockId": None,
                        "timestamp": "",
                        "detail": str(exc),
                    }
                )
                run.finish("error", str(exc))

        threading.Thread(target=worker, name=f"dara-run-{run.run_id}", daemon=True).start()
        return Response(
            json.dumps({"runId": run.run_id, "provider": provider}),
            status_code=202,
            media_type="application/json; charset=utf-8",
        )

    @app.get("/runs")
    def list_runs() -> Response:
        with runs_lock:
            items = [run.summary() for run in runs.values()]
        return Response(json.dumps(items), media_type="application/json; charset=utf-8")

    @app.get("/runs/{run_id}")
    def get_run(run_id: str) -> Response:
        run = _get_run(run_id)
        if run is None:
            return _error(404, "not-found", f"no run {run_id}")
        return Response(json.dumps(run.summary()), media_type="application/json; charset=utf-8")

    @app.get("/runs/{run_id}/events")
    def stream_events(run_id: str) -> Response:
        run = _get_run(run_id)
        if run is None:
            return _error(404, "not-found", f"no run {run_id}")

        def generate():
            sent = 0
            while True:
                with run.cond:
                    while sent >= len(run.events) and run.outcome is None:
                        run.cond.wait(timeout=_STREAM_POLL_S)
                    fresh = run.events[sent:]
                    sent += len(fresh)
                    done = run.outcome is not None and sent >= len(run.events)
                for event in fresh:
                    yield f"data: {json.dumps(event, ensure_ascii=False)}\n\n"
                if done:
                    yield f"event: end\ndata: {json.dumps(run.summary())}\n\n"
                    return

        return StreamingResponse(generate(), media_type="text/event-stream")

    @app.post("/runs/{run_id}/ack")
    def acknowledge(run_id: str) -> Response:
        run = _get_run(run_id)
        if run is None:
            return _error(404, "not-found", f"no run {run_id}")
        with run.cond:
            if run.outcome != "interaction-required":
                return _error(409, "not-applicable", "run is not awaiting interaction")
            run.acknowledged = True
        return Response(json.dumps(run.summary()), media_type="application/json; charset=utf-8")

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
