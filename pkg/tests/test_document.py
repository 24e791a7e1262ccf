import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridhop.document import (
    DanglingReferenceError,
    ParseError,
    SchemaError,
    emit_document,
    parse_network,
)
from helpers import FIXTURE_NAMES, doc
from gridhop.cli import fixture_text


def _raw(name):
    return json.loads(fixture_text(f"{name}.json"))


def test_haxby_firm_transformer_ratings():
    n = doc("haxby").to_network("2033")
    assert n.source["T_HAXBY"].contingency_capacity == 15.0
    assert n.source["T_HUNTINGTON"].contingency_capacity == 24.0
    assert n.total_demand() == pytest.approx(16.7 + 20.0)


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_round_trip_is_identity(name):
    d = doc(name)
    text = emit_document(d)
    assert parse_network(text) == d
    assert emit_document(parse_network(text)) == text


def test_empty_document_lists_required_sections():
    with pytest.raises(SchemaError) as err:
        parse_network("{}")
    fields = " ".join(err.value.errors)
    assert "schema_version" in fields and "network" in fields


def test_malformed_json_reports_position():
    with pytest.raises(ParseError) as err:
        parse_network('{\n  "schema_version": "1",\n  oops\n}')
    assert "line 3" in err.value.errors[0]


def test_top_level_must_be_an_object():
    with pytest.raises(ParseError):
        parse_network("[]")


def test_unknown_field_is_rejected_with_location():
    raw = _raw("fig2")
    raw["network"]["branches"][0]["colour"] = "red"
    with pytest.raises(SchemaError) as err:
        parse_network(json.dumps(raw))
    assert any(e.startswith("network.branches.0.colour") for e in err.value.errors)


def test_wrong_schema_version():
    raw = _raw("fig2")
    raw["schema_version"] = "2"
    with pytest.raises(SchemaError):
        parse_network(json.dumps(raw))


def test_demand_on_unknown_bus_names_the_id():
    raw = _raw("fig2")
    raw["network"]["demands"][0]["bus"] = "ATLANTIS"
    with pytest.raises(DanglingReferenceError) as err:
        parse_network(json.dumps(raw))
    assert "ATLANTIS" in str(err.value)


def test_scenario_and_state_references_are_checked():
    raw = _raw("haxby")
    raw["demand_scenarios"]["2033"]["D_GHOST"] = 1.0
    raw["states"]["transfer"]["closed"].append("NO_SUCH_SWITCH")
    with pytest.raises(DanglingReferenceError) as err:
        parse_network(json.dumps(raw))
    assert len(err.value.errors) == 2


@settings(max_examples=50, deadline=None)
@given(
    st.sampled_from(FIXTURE_NAMES),
    st.floats(min_value=0, max_value=1e3, allow_nan=False),
    st.text(max_size=20),
)
def test_round_trip_survives_edits(name, magnitude, note):
    raw = _raw(name)
    raw["network"]["demands"][0]["magnitude"] = magnitude
    raw["network"]["demands"][0]["note"] = note
    d = parse_network(json.dumps(raw))
    assert parse_network(emit_document(d)) == d
