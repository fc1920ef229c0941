from __future__ import annotations

from datetime import date

import pytest

from dara.errors import EngineMismatch, SelectionOutOfRange, UnknownPlaceholder
from dara.sandbox import document_for, scenario_by_name
from dara.workflow import (
    ENGINE_ID,
    ParameterSelection,
    WorkflowBlock,
    bind_parameters,
    validate_workflow,
)

BASE = "http://sandbox.test:9"


def container(*blocks, engine=ENGINE_ID):
    return {
        "automationEngine": engine,
        "workflow": list(blocks),
        "version": "1.0",
        "verified": False,
    }


def nav(url="https://x.example/start", bid="b0"):
    return {"id": bid, "kind": "navigate", "url": url}


def wait(expr, bid, timeout=None):
    block = {"id": bid, "kind": "wait-for-element",
             "selector": {"strategy": "xpath", "expression": expr}}
    if timeout is not None:
        block["timeoutMs"] = timeout
    return block


# --- validate_workflow -------------------------------------------------------


def test_sandbox_fixture_workflow_valid():
    doc = document_for(scenario_by_name("happy-path"), BASE)
    report = validate_workflow(doc.workflow_container)
    assert report.valid
    assert not report.warnings


def test_duplicate_ids_reports_both_positions():
    report = validate_workflow(
        container(
            nav(bid="b1"),
            wait("//form", "b1"),
            {"id": "b2", "kind": "emit-signal", "signal": "x"},
        )
    )
    assert not report.valid
    [finding] = report.errors
    assert finding.path == "workflow[1].id"
    assert "positions 0 and 1" in finding.message


def test_foreign_engine_passes_with_skip_warning():
    report = validate_workflow(container({"anything": "goes"}, engine="automa/other"))
    assert report.valid
    assert len(report.warnings) == 1
    assert "skipping" in report.warnings[0].message


def test_empty_workflow_warns():
    report = validate_workflow(container())
    assert report.valid
    assert any("empty" in f.message for f in report.warnings)


def test_missing_selector_is_error():
    report = validate_workflow(container({"id": "b1", "kind": "click"}))
    assert [f.path for f in report.errors] == ["workflow[0].selector"]


def test_dangling_and_backward_on_missing():
    report = validate_workflow(
        container(
            {"id": "b1", "kind": "branch-on-element",
             "selector": {"expression": "//div"}, "onMissing": "nope"},
        )
    )
    assert any("unknown block id" in f.message for f in report.errors)

    report = validate_workflow(
        container(
            nav(bid="b1"),
            {"id": "b2", "kind": "branch-on-element",
             "selector": {"expression": "//div"}, "onMissing": "b1"},
        )
    )
    assert any("later block" in f.message for f in report.errors)


def test_malformed_templates_rejected():
    report = validate_workflow(
        container({"id": "b1", "kind": "fill-field",
                   "selector": {"expression": "//input"}, "value": "{{param.x} oops"})
    )
    assert any("unbalanced" in f.message for f in report.errors)

    report = validate_workflow(
        container({"id": "b1", "kind": "fill-field",
                   "selector": {"expression": "//input"}, "value": "{{wrong.name}}"})
    )
    assert any("malformed placeholder" in f.message for f in report.errors)


def test_kind_specific_required_fields():
    cases = [
        ({"id": "b1", "kind": "navigate"}, "url"),
        ({"id": "b1", "kind": "emit-signal"}, "signal"),
        ({"id": "b1", "kind": "delay"}, "timeoutMs"),
        ({"id": "b1", "kind": "fill-field", "selector": {"expression": "//i"}}, "value"),
    ]
    for block, field_name in cases:
        report = validate_workflow(container(block))
        assert any(field_name in f.path for f in report.errors), (block, report)


def test_unknown_kind_rejected():
    report = validate_workflow(container({"id": "b1", "kind": "teleport"}))
    assert any(f.path == "workflow[0].kind" for f in report.errors)


# --- ParameterSelection ---------------------------------------------------------


def test_selection_invariants():
    with pytest.raises(ValueError):
        ParameterSelection(data_format="json", all_time=False)
    with pytest.raises(ValueError):
        ParameterSelection(
            data_format="json", all_time=False,
            start=date(2024, 6, 1), end=date(2024, 1, 1),
        )
    with pytest.raises(ValueError):
        ParameterSelection(data_format="json", all_time=True, start=date(2024, 1, 1))


# --- bind_parameters --------------------------------------------------------------


@pytest.fixture()
def sandbox_doc():
    return document_for(scenario_by_name("happy-path"), BASE)


def test_direct_substitution(sandbox_doc):
    sel = ParameterSelection(data_format="json")
    bound = bind_parameters(sandbox_doc.workflow_container, sandbox_doc, sel)
    by_id = {b.id: b for b in bound.blocks}
    assert by_id["b6"].value == "json"
    assert by_id["b2"].value == "all-time"


def test_bound_workflow_matches_hand_substituted_golden(sandbox_doc):
    sel = ParameterSelection(
        data_format="csv", all_time=False, start=date(2024, 1, 1), end=date(2024, 6, 30)
    )
    bound = bind_parameters(sandbox_doc.workflow_container, sandbox_doc, sel)
    # golden: the sandbox workflow with every placeholder substituted by hand
    golden = [
        ("b1", None),
        ("b2", "custom"),
        ("b3", None),
        ("b4", "2024-01-01"),
        ("b5", "2024-06-30"),
        ("b6", "csv"),
        ("b7", None),
        ("b8", None),
        ("b9", None),
        ("b10", None),
        ("b11", None),
    ]
    assert [(b.id, b.value) for b in bound.blocks] == golden
    assert bound.provider == "sandbox-happy-path"
    assert bound.start_url == f"{BASE}/happy-path/privacy/dsar"
    assert len(bound.source_hash) == 64


def test_selection_must_match_declared_capabilities(sandbox_doc):
    data = sandbox_doc.to_dict()
    data["requestParameter"]["timeRange"]["customRange"] = False
    from dara.document import DarpalDocument, with_embedded_hash

    doc = with_embedded_hash(DarpalDocument(data))
    sel = ParameterSelection(
        data_format="json", all_time=False, start=date(2024, 1, 1), end=date(2024, 1, 2)
    )
    with pytest.raises(SelectionOutOfRange) as err:
        bind_parameters(doc.workflow_container, doc, sel)
    assert err.value.field == "timeRange"


def test_selection_format_and_extras_out_of_range(sandbox_doc):
    with pytest.raises(SelectionOutOfRange):
        bind_parameters(
            sandbox_doc.workflow_container, sandbox_doc,
            ParameterSelection(data_format="parquet"),
        )
    with pytest.raises(SelectionOutOfRange):
        bind_parameters(
            sandbox_doc.workflow_container, sandbox_doc,
            ParameterSelection(data_format="json", extras={"undeclared": "x"}),
        )
    with pytest.raises(SelectionOutOfRange):
        bind_parameters(
            sandbox_doc.workflow_container, sandbox_doc,
            ParameterSelection(data_format="json", media_quality="high"),
        )


def test_unknown_placeholder(sandbox_doc):
    data = sandbox_doc.to_dict()
    data["requestInterface"]["webinterface"]["workflowContainer"]["workflow"][1]["value"] = (
        "{{param.nonexistent}}"
    )
    from dara.document import DarpalDocument, with_embedded_hash

    doc = with_embedded_hash(DarpalDocument(data))
    with pytest.raises(UnknownPlaceholder) as err:
        bind_parameters(doc.workflow_container, doc, ParameterSelection(data_format="json"))
    assert err.value.path == "param.nonexistent"


def test_engine_mismatch(sandbox_doc):
    foreign = dict(sandbox_doc.workflow_container, automationEngine="automa/other")
    with pytest.raises(EngineMismatch):
        bind_parameters(foreign, sandbox_doc, ParameterSelection(data_format="json"))


def test_binding_is_idempotent_and_preserves_blocks(sandbox_doc):
    sel = ParameterSelection(data_format="json")
    first = bind_parameters(sandbox_doc.workflow_container, sandbox_doc, sel)
    rebound_container = dict(
        sandbox_doc.workflow_container,
        workflow=[b.to_mapping() for b in first.blocks],
    )
    second = bind_parameters(rebound_container, sandbox_doc, sel)
    assert second.blocks == first.blocks
    assert [b.id for b in first.blocks] == [
        b["id"] for b in sandbox_doc.workflow_container["workflow"]
    ]


def test_block_mapping_round_trip():
    raw = {
        "id": "b1",
        "kind": "fill-field",
        "selector": {"strategy": "css", "expression": "#x"},
        "value": "v",
        "timeoutMs": 250,
    }
    assert WorkflowBlock.from_mapping(raw).to_mapping() == raw
