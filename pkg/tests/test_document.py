from __future__ import annotations

import copy
import json
import random
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dara.document import (
    MANDATORY_FIELD_PATHS,
    DarpalDocument,
    canonicalize,
    compute_hash,
    normalize_provider_name,
    parse_document,
    serialize_document,
    validate_document,
    verify_hash,
    version_greater,
    version_key,
    with_embedded_hash,
)
from dara.errors import DocumentSyntaxError, NotValidatedError, StructureError

from conftest import MINIMAL_GOLDEN_DIGEST, corpus_paths, minimal_document


# --- independent oracles -----------------------------------------------------

_ESCAPES = {'"': '\\"', "\\": "\\\\", "\b": "\\b", "\f": "\\f", "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _naive_string(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def naive_canonical(value) -> str:
    """Hand-rolled canonical serializer, independent of json.dumps."""
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, str):
        return _naive_string(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return "[" + ",".join(naive_canonical(v) for v in value) + "]"
    if isinstance(value, dict):
        parts = [f"{_naive_string(k)}:{naive_canonical(v)}" for k, v in sorted(value.items())]
        return "{" + ",".join(parts) + "}"
    raise TypeError(type(value))


_URL_ORACLE = re.compile(r"^https?://[^\s/?#]+[^\s]*$")


def shuffle_keys(value, rng: random.Random):
    if isinstance(value, dict):
        items = [(k, shuffle_keys(v, rng)) for k, v in value.items()]
        rng.shuffle(items)
        return dict(items)
    if isinstance(value, list):
        return [shuffle_keys(v, rng) for v in value]
    return value


def delete_path(data: dict, dotted: str) -> dict:
    out = copy.deepcopy(data)
    parts = dotted.split(".")
    node = out
    for part in parts[:-1]:
        node = node[part]
    del node[parts[-1]]
    return out


# --- parsing -----------------------------------------------------------------


def test_parse_corpus_facebook_webinterface_available():
    doc = parse_document((corpus_paths()[0].parent / "facebook.darpal.json").read_text())
    assert doc.webinterface["available"] is True
    assert doc.name == "Facebook"


def test_parse_minimal_document():
    doc = parse_document(json.dumps(minimal_document().data))
    assert doc.data["requestInterface"]["manual"]["available"] is False


def test_parse_key_order_irrelevant():
    rng = random.Random(7)
    base = minimal_document().data
    a = parse_document(json.dumps(base))
    b = parse_document(json.dumps(shuffle_keys(base, rng)))
    assert a == b  # structural equality oracle: deep dict comparison


def test_parse_syntax_error_carries_position():
    with pytest.raises(DocumentSyntaxError) as err:
        parse_document('{"meta": \n {"name": }}')
    assert err.value.line == 2
    assert err.value.column > 0


def test_parse_missing_section_is_structure_error():
    with pytest.raises(StructureError, match="requestInterface"):
        parse_document(json.dumps({"meta": {}, "requestParameter": {}}))
    with pytest.raises(StructureError):
        parse_document("[1, 2]")


def test_unknown_fields_round_trip():
    data = minimal_document().data
    data["x-future-extension"] = {"nested": [1, 2, {"deep": True}]}
    data["meta"]["x-note"] = "kept verbatim"
    doc = DarpalDocument(data)
    again = parse_document(serialize_document(doc))
    assert again == doc


def test_corpus_round_trip():
    for path in corpus_paths():
        doc = parse_document(path.read_text())
        assert parse_document(serialize_document(doc)) == doc


# --- validation ----------------------------------------------------------------


def test_minimal_document_valid():
    report = validate_document(minimal_document())
    assert report.valid
    # no available branch at all is worth a warning, not an error
    assert any(f.path == "requestInterface" for f in report.warnings)


def test_corpus_documents_valid_no_errors():
    for path in corpus_paths():
        report = validate_document(parse_document(path.read_text()))
        assert report.valid, (path.name, [f.render() for f in report.errors])


def test_deleting_data_format_flags_exact_path():
    doc = DarpalDocument(delete_path(minimal_document().data, "requestParameter.dataFormat"))
    report = validate_document(doc)
    assert not report.valid
    assert [f.path for f in report.errors] == ["requestParameter.dataFormat"]


@pytest.mark.parametrize("path", MANDATORY_FIELD_PATHS)
def test_mandatory_path_deletion_flips_invalid(path):
    doc = DarpalDocument(delete_path(minimal_document().data, path))
    report = validate_document(doc)
    assert not report.valid
    assert any(f.path == path for f in report.errors)


def test_invalid_start_url_double_checked_by_oracle():
    data = minimal_document().data
    data["requestInterface"]["webinterface"]["available"] = True
    data["requestInterface"]["webinterface"]["startUrl"] = "not a url"
    report = validate_document(DarpalDocument(data))
    assert any(
        f.path == "requestInterface.webinterface.startUrl" and f.severity == "error"
        for f in report.findings
    )
    assert not _URL_ORACLE.match("not a url")
    # and the corpus start URLs all satisfy the independent checker
    for path in corpus_paths():
        url = parse_document(path.read_text()).start_url
        assert _URL_ORACLE.match(url), url


def test_endpoint_url_alias_warns_but_validates():
    data = minimal_document().data
    data["requestInterface"]["api"] = {
        "available": True,
        "endpointUrl": "https://api.example.com/dsar",
    }
    report = validate_document(DarpalDocument(data))
    assert report.valid
    assert any(f.path == "requestInterface.api.endpointUrl" for f in report.warnings)
    assert DarpalDocument(data).api_endpoint == "https://api.example.com/dsar"


def test_unknown_auth_method_warns():
    data = minimal_document().data
    data["requestInterface"]["manual"]["authentication"] = {"methods": ["carrier-pigeon"]}
    report = validate_document(DarpalDocument(data))
    assert report.valid
    assert any("carrier-pigeon" in f.message for f in report.warnings)


def test_malformed_auth_method_is_error():
    data = minimal_document().data
    data["requestInterface"]["manual"]["authentication"] = {"methods": ["Not Kebab"]}
    assert not validate_document(DarpalDocument(data)).valid


def test_both_time_range_flags_false_is_error():
    data = minimal_document().data
    data["requestParameter"]["timeRange"] = {"allTime": False, "customRange": False}
    report = validate_document(DarpalDocument(data))
    assert any(f.path == "requestParameter.timeRange" for f in report.errors)


# --- canonical form --------------------------------------------------------------


def test_canonical_ignores_key_order():
    rng = random.Random(13)
    doc = minimal_document()
    blob = canonicalize(doc)
    for _ in range(50):
        shuffled = DarpalDocument(shuffle_keys(doc.data, rng))
        assert canonicalize(shuffled) == blob


def test_canonical_excludes_hash_field():
    doc = minimal_document()
    other = DarpalDocument(copy.deepcopy(doc.data))
    other.data["meta"]["_hash"] = "f" * 64
    assert canonicalize(doc) == canonicalize(other)
    assert compute_hash(doc) == compute_hash(other)


def test_canonical_matches_independent_serializer():
    for path in corpus_paths():
        doc = parse_document(path.read_text())
        stripped = copy.deepcopy(doc.data)
        stripped["meta"].pop("_hash")
        assert canonicalize(doc) == naive_canonical(stripped).encode("utf-8")


def test_canonical_non_ascii_stays_utf8():
    data = minimal_document().data
    data["meta"]["name"] = "Bücherei Ümläut"
    doc = with_embedded_hash(DarpalDocument(data))
    blob = canonicalize(doc)
    assert "Bücherei".encode("utf-8") in blob
    stripped = copy.deepcopy(doc.data)
    stripped["meta"].pop("_hash")
    assert blob == naive_canonical(stripped).encode("utf-8")


def test_canonicalize_rejects_invalid_document():
    data = delete_path(minimal_document().data, "requestParameter.dataFormat")
    with pytest.raises(NotValidatedError):
        canonicalize(DarpalDocument(data))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_canonical_stability_property(seed):
    rng = random.Random(seed)
    doc = minimal_document()
    assert canonicalize(DarpalDocument(shuffle_keys(doc.data, rng))) == canonicalize(doc)


# --- hashing ----------------------------------------------------------------------


def test_golden_digest_frozen_from_hashing_utility():
    assert compute_hash(minimal_document()) == MINIMAL_GOLDEN_DIGEST


def test_hash_changes_with_content():
    doc = minimal_document()
    other = DarpalDocument(copy.deepcopy(doc.data))
    other.data["meta"]["name"] = "Minimal Provides"
    assert compute_hash(doc) != compute_hash(other)


def test_verify_hash_round_trip():
    doc = with_embedded_hash(minimal_document())
    assert verify_hash(doc)

    flipped = copy.deepcopy(doc.data)
    digest = flipped["meta"]["_hash"]
    flipped["meta"]["_hash"] = ("0" if digest[0] != "0" else "1") + digest[1:]
    assert not verify_hash(DarpalDocument(flipped))


def test_verify_hash_independent_of_key_order():
    doc = with_embedded_hash(minimal_document())
    shuffled = DarpalDocument(shuffle_keys(doc.data, random.Random(3)))
    assert verify_hash(shuffled)


def test_with_embedded_hash_idempotent_and_bootstraps():
    data = minimal_document().data
    del data["meta"]["_hash"]
    doc = with_embedded_hash(DarpalDocument(data))
    assert verify_hash(doc)
    assert with_embedded_hash(doc) == doc


def test_corpus_hashes_verify():
    for path in corpus_paths():
        assert verify_hash(parse_document(path.read_text())), path.name


# --- names and versions --------------------------------------------------------------


def test_normalize_provider_name():
    assert normalize_provider_name("LinkedIn") == "linkedin"
    assert normalize_provider_name("My Service GmbH") == "my-service-gmbh"
    assert normalize_provider_name("  eBay  ") == "ebay"
    assert normalize_provider_name("X (Twitter)") == "x-twitter"


def test_version_ordering():
    assert version_key("1.10") > version_key("1.9")
    assert version_greater("2.0", "1.99.99")
    assert not version_greater("1.0", "1.0")
    with pytest.raises(ValueError):
        version_key("1.0-beta")
