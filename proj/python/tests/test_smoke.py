import os
from pathlib import Path

import pytest

import stwa

PROGRAMS = Path(os.environ.get(
    "STWA_PROGRAMS_DIR", Path(__file__).resolve().parents[2] / "programs"))


def source(name):
    return (PROGRAMS / name).read_text()


def test_graph_answers():
    eng = stwa.Engine(source("graph_variant.P"))
    assert eng.solve("p(a,A)") == [{"A": "b"}, {"A": "c"}]


def test_log_trace_lines():
    eng = stwa.Engine(source("graph_variant.P"), trace="log")
    eng.solve("p(a,A)")
    lines = eng.take_trace().splitlines()
    assert len(lines) == 8
    assert lines[0].split() == ["1", "p(a,A)", "add", "query", "p(a,?)",
                                "to", "table"]


def test_full_abstraction_table():
    eng = stwa.Engine(source("join_stwfa.P"))
    assert eng.instances("p(a,X)") == ["p(a,b)", "p(a,c)"]
    assert "p(d,c)" in eng.dump_tables()


def test_least_model_tags():
    tags = stwa.least_model(source("graph_variant.P"))
    assert tags["p(d,c)"] == 4
    assert tags["e(a,b)"] == 0


def test_arrow_reading():
    tags = stwa.least_model(source("prop_interp.P"), arrow=True)
    assert tags == {"s": 0, "t": 0, "r": 1, "u": 2, "q": 3, "p": 4}


def test_transform_names_permutations():
    text = stwa.transform(source("p4_index.P"))
    assert ":- table p1234/4, p4231/4 as subsumptive." in text


def test_illegal_mode():
    eng = stwa.Engine(source("p4_index.P"))
    with pytest.raises(stwa.IllegalModeError):
        eng.solve("p(A,b,C,D)")


def test_parse_error():
    with pytest.raises(stwa.ParseError):
        stwa.Engine("p(a.")
