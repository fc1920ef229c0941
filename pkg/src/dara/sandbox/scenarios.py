"""Sandbox scenarios: a mock provider's DSAR pages in several failure flavors.

A scenario defines the request form and an optional failure mode:

    none           the happy path
    captcha        the submit control never appears
    dom-drift      element ids change between page serves (generation counter)
    slow           the form page responds after a configurable latency
    redirect-loop  the form page redirects to itself

Pages are deterministic given (scenario, generation). The module also builds
the matching DARPAL document (with a correctly embedded hash), so the sandbox
and the workflow that drives it always agree, plus the scripted page model the
reference interpreter runs against.
"""

from __future__ import annotations

import html
from dataclasses import dataclass, field

from ..document import DarpalDocument, with_embedded_hash
from ..engine.interpreter import PageModel, ScriptedElement, ScriptedPage
from ..workflow import ENGINE_ID

AUTH_COOKIE = "dara_sandbox_auth"
AUTH_COOKIE_VALUE = "ok"
LOGIN_USER = "dara"
LOGIN_PASSWORD = "test"

TIME_RANGE_OPTIONS = ("all-time", "custom")
DATA_FORMAT_OPTIONS = ("json", "csv", "html")


@dataclass(frozen=True)
class FormField:
    field_id: str
    kind: str  # text | select | checkbox
    label: str
    options: tuple[str, ...] = ()


DEFAULT_FORM_FIELDS = (
    FormField("time-range", "select", "Time range", TIME_RANGE_OPTIONS),
    FormField("range-start", "text", "From (YYYY-MM-DD)"),
    FormField("range-end", "text", "To (YYYY-MM-DD)"),
    FormField("data-format", "select", "File format", DATA_FORMAT_OPTIONS),
)

MINIMAL_FORM_FIELDS = (
    FormField("time-range", "select", "Time range", TIME_RANGE_OPTIONS),
    FormField("data-format", "select", "File format", DATA_FORMAT_OPTIONS),
)


@dataclass(frozen=True)
class Scenario:
    name: str
    requires_login: bool = True
    form_fields: tuple[FormField, ...] = DEFAULT_FORM_FIELDS
    failure_mode: str = "none"  # none | captcha | dom-drift | slow | redirect-loop
    latency_ms: int = 0

    def __post_init__(self) -> None:
        if self.latency_ms < 0:
            raise ValueError("latency must be >= 0")

    def field(self, field_id: str) -> FormField | None:
        return next((f for f in self.form_fields if f.field_id == field_id), None)


BUILTIN_SCENARIOS = (
    Scenario("happy-path"),
    Scenario("minimal-form", form_fields=MINIMAL_FORM_FIELDS),
    Scenario("captcha", failure_mode="captcha"),
    Scenario("dom-drift", failure_mode="dom-drift"),
    Scenario("slow", failure_mode="slow", latency_ms=400),
    Scenario("redirect-loop", failure_mode="redirect-loop"),
)


def scenario_by_name(name: str) -> Scenario:
    for scenario in BUILTIN_SCENARIOS:
        if scenario.name == name:
            return scenario
    raise KeyError(name)


def dom_id(scenario: Scenario, base: str, generation: int) -> str:
    """Element id as served: dom-drift shifts ids on every new generation."""
    if scenario.failure_mode == "dom-drift" and generation > 0:
        return f"{base}-g{generation}"
    return base


# --- page rendering -------------------------------------------------------------


def render_login_page(scenario: Scenario) -> str:
    return f"""<!DOCTYPE html>
<html><head><title>{scenario.name} - sign in</title></head>
<body>
  <div id="login-portal">
    <h1>Sign in to continue</h1>
    <form id="login-form" method="post" action="/{scenario.name}/login">
      <input id="username" name="username" type="text">
      <input id="password" name="password" type="password">
      <button id="login-submit" type="submit">Sign in</button>
    </form>
  </div>
</body></html>"""


def _render_field(scenario: Scenario, form_field: FormField, generation: int) -> str:
    fid = dom_id(scenario, form_field.field_id, generation)
    label = html.escape(form_field.label)
    if form_field.kind == "select":
        options = "".join(
            f'<option value="{html.escape(o)}">{html.escape(o)}</option>'
            for o in form_field.options
        )
        control = f'<select id="{fid}" name="{form_field.field_id}">{options}</select>'
    elif form_field.kind == "checkbox":
        control = f'<input id="{fid}" name="{form_field.field_id}" type="checkbox" value="yes">'
    else:
        control = f'<input id="{fid}" name="{form_field.field_id}" type="text">'
    return f'<label for="{fid}">{label}</label> {control}'


def render_form_page(scenario: Scenario, generation: int) -> str:
    rows = "\n      ".join(_render_field(scenario, f, generation) for f in scenario.form_fields)
    if scenario.failure_mode == "captcha":
        submit = '<div class="captcha">Please solve the puzzle to continue.</div>'
    else:
        submit = (
            f'<button id="{dom_id(scenario, "submit-request", generation)}" '
            'type="submit">Request my data</button>'
        )
    return f"""<!DOCTYPE html>
<html><head><title>{scenario.name} - privacy settings</title></head>
<body>
  <h1>Request a copy of your data</h1>
  <form id="{dom_id(scenario, 'dsar-form', generation)}" method="post" action="/{scenario.name}/submit">
      {rows}
      {submit}
  </form>
</body></html>"""


def render_confirm_page(scenario: Scenario) -> str:
    return f"""<!DOCTYPE html>
<html><head><title>{scenario.name} - request received</title></head>
<body>
  <div id="confirmation">Your request was received. We will notify you when your data is ready.</div>
</body></html>"""


# --- DARPAL document for a scenario ----------------------------------------------


def workflow_blocks_for(scenario: Scenario) -> list[dict]:
    """The recorded automation steps for the scenario's generation-0 form."""
    blocks: list[dict] = [
        {
            "id": "b1",
            "kind": "wait-for-element",
            "selector": {"strategy": "xpath", "expression": "//form[@id='dsar-form']"},
            "timeoutMs": 3000,
        },
        {
            "id": "b2",
            "kind": "select-option",
            "selector": {"strategy": "xpath", "expression": "//select[@id='time-range']"},
            "value": "{{param.timeRange}}",
        },
        {
            "id": "b3",
            "kind": "branch-on-element",
            "selector": {"strategy": "xpath", "expression": "//input[@id='range-start']"},
            "onMissing": "b6",
            "timeoutMs": 200,
        },
        {
            "id": "b4",
            "kind": "fill-field",
            "selector": {"strategy": "xpath", "expression": "//input[@id='range-start']"},
            "value": "{{param.timeRange.start}}",
        },
        {
            "id": "b5",
            "kind": "fill-field",
            "selector": {"strategy": "xpath", "expression": "//input[@id='range-end']"},
            "value": "{{param.timeRange.end}}",
        },
        {
            "id": "b6",
            "kind": "select-option",
            "selector": {"strategy": "xpath", "expression": "//select[@id='data-format']"},
            "value": "{{param.dataFormat}}",
        },
        {"id": "b7", "kind": "emit-signal", "signal": "form-filled"},
        {
            "id": "b8",
            "kind": "wait-for-element",
            "selector": {"strategy": "xpath", "expression": "//button[@id='submit-request']"},
            "timeoutMs": 1500,
        },
        {
            "id": "b9",
            "kind": "submit",
            "selector": {"strategy": "xpath", "expression": "//button[@id='submit-request']"},
        },
        {
            "id": "b10",
            "kind": "wait-for-element",
            "selector": {"strategy": "xpath", "expression": "//div[@id='confirmation']"},
            "timeoutMs": 3000,
        },
        {"id": "b11", "kind": "emit-signal", "signal": "request-confirmed"},
    ]
    return blocks


def document_for(scenario: Scenario, base_url: str) -> DarpalDocument:
    """Build the provider document describing this sandbox scenario."""
    base = base_url.rstrip("/")
    data = {
        "$schemaVersion": "1.0",
        "meta": {
            "name": f"Sandbox {scenario.name.replace('-', ' ').title()}",
            "version": "1.0",
        },
        "requestParameter": {
            "timeRange": {"allTime": True, "customRange": True},
            "dataFormat": list(DATA_FORMAT_OPTIONS),
        },
        "requestInterface": {
            "manual": {"available": False},
            "webinterface": {
                "available": True,
                "startUrl": f"{base}/{scenario.name}/privacy/dsar",
                "authentication": {"methods": ["account-login"]},
                "workflowContainer": {
                    "automationEngine": ENGINE_ID,
                    "workflow": workflow_blocks_for(scenario),
                    "version": "1.0",
                    "verified": True,
                },
            },
            "api": {"available": False},
        },
    }
    return with_embedded_hash(DarpalDocument(data))


# --- scripted page model for the reference interpreter ----------------------------


def page_model_for(
    scenario: Scenario,
    base_url: str,
    *,
    generation: int = 0,
    authenticated: bool = True,
) -> PageModel:
    """Snapshot the pages exactly as the sandbox would serve them.

    The element keys are the workflow's selector expressions: the interpreter
    resolves by expression, so a drifted DOM is modeled by the recorded
    expressions simply being absent.
    """
    base = base_url.rstrip("/")
    form_url = f"{base}/{scenario.name}/privacy/dsar"
    login_url = f"{base}/{scenario.name}/login"
    confirm_url = f"{base}/{scenario.name}/confirm"

    redirects: dict[str, str] = {}
    if scenario.failure_mode == "redirect-loop":
        redirects[form_url] = form_url
    elif scenario.requires_login and not authenticated:
        redirects[form_url] = login_url

    drifted = scenario.failure_mode == "dom-drift" and generation > 0
    form_elements: dict[str, ScriptedElement] = {}
    if not drifted:
        form_elements["//form[@id='dsar-form']"] = ScriptedElement()
        for form_field in scenario.form_fields:
            kind = "select" if form_field.kind == "select" else "input"
            form_elements[f"//{kind}[@id='{form_field.field_id}']"] = ScriptedElement()
        if scenario.failure_mode != "captcha":
            form_elements["//button[@id='submit-request']"] = ScriptedElement(
                clicks_to=confirm_url
            )

    pages = {
        form_url: ScriptedPage(
            url=form_url,
            elements=form_elements,
            load_delay_ms=scenario.latency_ms if scenario.failure_mode == "slow" else 0,
        ),
        login_url: ScriptedPage(
            url=login_url,
            elements={"//div[@id='login-portal']": ScriptedElement()},
        ),
        confirm_url: ScriptedPage(
            url=confirm_url,
            elements={"//div[@id='confirmation']": ScriptedElement()},
        ),
    }
    return PageModel(pages=pages, redirects=redirects)
