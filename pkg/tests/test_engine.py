from __future__ import annotations

import time

import pytest

from dara.engine import BrowserSession, execute, reference_interpret, step
from dara.errors import SessionLost
from dara.sandbox import document_for, page_model_for, scenario_by_name
from dara.sandbox.scenarios import AUTH_COOKIE, AUTH_COOKIE_VALUE
from dara.signals import check_signal_grammar
from dara.workflow import ParameterSelection, WorkflowBlock, bind_parameters
from dara.workflow import Selector

SELECTION = ParameterSelection(data_format="json")


def open_session(minidriver, sandbox, *, authenticated=True, element_timeout_ms=1500):
    session = BrowserSession(
        minidriver.url, page_timeout_ms=4000, element_timeout_ms=element_timeout_ms
    )
    session.open()
    if authenticated:
        session.add_cookie(AUTH_COOKIE, AUTH_COOKIE_VALUE, domain=f"127.0.0.1:{sandbox.port}")
    return session


def bound_workflow(sandbox, name):
    doc = document_for(scenario_by_name(name), sandbox.base_url)
    return bind_parameters(doc.workflow_container, doc, SELECTION)


def run_live(minidriver, sandbox, name, *, authenticated=True, ceiling_ms=30_000):
    workflow = bound_workflow(sandbox, name)
    session = open_session(minidriver, sandbox, authenticated=authenticated)
    events = []
    result = execute(workflow, session, events.append, run_ceiling_ms=ceiling_ms)
    return result, events, workflow


def run_model(sandbox, workflow, name, *, generation=0, authenticated=True):
    model = page_model_for(
        scenario_by_name(name), sandbox.base_url,
        generation=generation, authenticated=authenticated,
    )
    return reference_interpret(workflow, model, page_timeout_ms=4000, element_timeout_ms=1500)


def triple(result):
    return result.outcome, result.failed_block, result.trace


# --- step-level behavior ------------------------------------------------------------


def test_step_fill_then_read_back(minidriver, sandbox):
    session = open_session(minidriver, sandbox)
    session.navigate(f"{sandbox.base_url}/happy-path/privacy/dsar")
    block = WorkflowBlock(
        id="x", kind="fill-field",
        selector=Selector("//input[@id='range-start']"), value="all-time",
    )
    outcome = step(session, block)
    assert outcome.status == "ok"
    element = session.find_element("xpath", "//input[@id='range-start']")
    assert session.element_property(element, "value") == "all-time"


def test_step_wait_timeout_is_bounded(minidriver, sandbox):
    session = open_session(minidriver, sandbox)
    session.navigate(f"{sandbox.base_url}/happy-path/privacy/dsar")
    block = WorkflowBlock(
        id="x", kind="wait-for-element",
        selector=Selector("//div[@id='does-not-exist']"), timeout_ms=500,
    )
    started = time.monotonic()
    outcome = step(session, block)
    elapsed = time.monotonic() - started
    assert outcome.status == "missing-element"
    assert elapsed >= 0.5


def test_step_assert_url_prefix(minidriver, sandbox):
    session = open_session(minidriver, sandbox)
    session.navigate(f"{sandbox.base_url}/happy-path/privacy/dsar")
    ok = step(session, WorkflowBlock(id="x", kind="assert-url",
                                     url=f"{sandbox.base_url}/happy-path/"))
    assert ok.status == "ok"
    miss = step(session, WorkflowBlock(id="x", kind="assert-url",
                                       url=f"{sandbox.base_url}/elsewhere/"))
    assert miss.status == "missing-element"


def test_branch_on_element_jumps_to_target(minidriver, sandbox):
    result, _, _ = run_live(minidriver, sandbox, "minimal-form")
    assert result.outcome == "success"
    # b3 branched straight to b6: the range fills b4/b5 never executed
    assert "b3" in result.trace and "b6" in result.trace
    assert "b4" not in result.trace and "b5" not in result.trace


# --- full runs -----------------------------------------------------------------------


def test_happy_path_signals_and_journal(minidriver, sandbox):
    result, events, _ = run_live(minidriver, sandbox, "happy-path")
    assert result.outcome == "success"
    assert [s.kind for s in result.signals] == ["started-execution", "success"]
    assert check_signal_grammar(result.signals)
    progress = [e for e in events if getattr(e, "name", None)]
    assert [p.name for p in progress] == ["form-filled", "request-confirmed"]
    [entry] = sandbox.journal()
    assert entry["fields"]["data-format"] == "json"
    assert entry["fields"]["time-range"] == "all-time"


def test_empty_workflow_completes_after_start_page(minidriver, sandbox):
    workflow = bound_workflow(sandbox, "happy-path")
    empty = type(workflow)(blocks=(), provider=workflow.provider,
                           source_hash=workflow.source_hash, start_url=workflow.start_url)
    session = open_session(minidriver, sandbox)
    result = execute(empty, session, lambda _e: None, run_ceiling_ms=10_000)
    assert result.outcome == "success"
    assert [s.kind for s in result.signals] == ["started-execution", "success"]
    assert result.trace == ()


def test_captcha_leaves_page_open_with_failed_block(minidriver, sandbox):
    result, _, _ = run_live(minidriver, sandbox, "captcha")
    assert result.outcome == "interaction-required"
    assert result.failed_block == "b8"
    assert [s.kind for s in result.signals] == ["started-execution", "interaction-required"]
    assert sandbox.journal() == []


def test_redirect_to_login_never_reports_started(minidriver, sandbox):
    result, _, _ = run_live(minidriver, sandbox, "happy-path", authenticated=False)
    assert result.outcome == "interaction-required"
    assert result.failed_block == "b1"
    assert [s.kind for s in result.signals] == ["interaction-required"]


def test_redirect_loop_is_an_error_not_interaction(minidriver, sandbox):
    result, _, _ = run_live(minidriver, sandbox, "redirect-loop")
    assert result.outcome == "error"
    assert [s.kind for s in result.signals] == ["error"]


def test_unreachable_control_server_raises_session_lost():
    session = BrowserSession("http://127.0.0.1:1", page_timeout_ms=500)
    with pytest.raises(SessionLost):
        session.open()


def test_run_ceiling_trips_interaction_required(minidriver, sandbox):
    workflow = bound_workflow(sandbox, "happy-path")
    session = open_session(minidriver, sandbox)
    result = execute(workflow, session, lambda _e: None, run_ceiling_ms=0)
    assert result.outcome == "interaction-required"
    assert result.failed_block == workflow.blocks[0].id


# --- engine / reference-interpreter equivalence ---------------------------------------


@pytest.mark.parametrize("name", ["happy-path", "minimal-form", "captcha", "slow", "redirect-loop"])
def test_engine_matches_reference_interpreter(minidriver, sandbox, name):
    result, _, workflow = run_live(minidriver, sandbox, name)
    model_result = run_model(sandbox, workflow, name)
    assert triple(result) == triple(model_result)


def test_equivalence_unauthenticated(minidriver, sandbox):
    result, _, workflow = run_live(minidriver, sandbox, "happy-path", authenticated=False)
    model_result = run_model(sandbox, workflow, "happy-path", authenticated=False)
    assert triple(result) == triple(model_result)


def test_equivalence_across_dom_drift_generations(minidriver, sandbox):
    first, _, workflow = run_live(minidriver, sandbox, "dom-drift")
    second, _, _ = run_live(minidriver, sandbox, "dom-drift")
    assert triple(first) == triple(run_model(sandbox, workflow, "dom-drift", generation=0))
    assert triple(second) == triple(run_model(sandbox, workflow, "dom-drift", generation=1))
    assert first.outcome == "success"
    assert second.outcome == "interaction-required"
    assert second.failed_block == "b1"


def test_interpreter_is_pure(sandbox):
    workflow = bound_workflow(sandbox, "happy-path")
    model = page_model_for(scenario_by_name("happy-path"), sandbox.base_url)
    a = reference_interpret(workflow, model)
    b = reference_interpret(workflow, model)
    assert a == b


def test_interpreter_scripted_absence(sandbox):
    workflow = bound_workflow(sandbox, "captcha")
    result = run_model(sandbox, workflow, "captcha")
    assert result.outcome == "interaction-required"
    assert result.failed_block == "b8"
