import json
from fractions import Fraction as F

import pytest

from napt import io as nio
from napt.complex import EdgePoint, Vertex
from napt.errors import ParseError, ValidationRefusal
from napt.measure import AtomicMeasure

NAMES = ["g1.json", "toric_interval.json", "toric_square.json", "algebra_g1.json", "algebra_nonpsd.json"]


@pytest.mark.parametrize("name", NAMES)
def test_canonical_files_round_trip(fixtures, name):
    text = (fixtures / name).read_text(encoding="utf-8")
    assert nio.dumps(nio.loads(text)) == text


def test_g1_contents(fixtures):
    pr = nio.load(fixtures / "g1.json")
    assert pr.kind == "metric_graph"
    assert pr.engine.V == 2
    assert pr.measure("delta_m") == AtomicMeasure({Vertex("m"): 1})
    assert pr.metric("vshape").value_at_vertex("m") == F(-1, 2)


def test_integers_are_accepted_and_canonicalized(fixtures):
    doc = json.loads((fixtures / "g1.json").read_text())
    doc["graph"]["degree"] = 2
    doc["metrics"]["vshape"]["values"]["m"] = "-2/4"
    out = nio.dumps(nio.parse_document(doc))
    assert out == (fixtures / "g1.json").read_text()


def test_edge_point_labels(fixtures):
    doc = json.loads((fixtures / "g1.json").read_text())
    doc["measures"]["quarter"] = {"e0@1/4": "1/1"}
    pr = nio.parse_document(doc)
    assert pr.measure("quarter") == AtomicMeasure({EdgePoint("e0", F(1, 4)): 1})


@pytest.mark.parametrize("mutate, fragment", [
    (lambda d: d.pop("napt_version"), "napt_version"),
    (lambda d: d.update(napt_version=2), "napt_version"),
    (lambda d: d.update(kind="surface"), "kind"),
    (lambda d: d["graph"].update(degree="two"), "degree"),
    (lambda d: d["graph"]["edges"][0].update(length=0.5), "length"),
    (lambda d: d["metrics"]["vshape"]["values"].update(m="1/0"), ""),
    (lambda d: d["measures"].update(bad={"zz": "1/1"}), ""),
])
def test_malformed_documents(fixtures, mutate, fragment):
    doc = json.loads((fixtures / "g1.json").read_text())
    mutate(doc)
    with pytest.raises(ParseError) as exc:
        nio.parse_document(doc)
    assert fragment in str(exc.value)


def test_invalid_graph_is_refused(fixtures):
    doc = json.loads((fixtures / "g1.json").read_text())
    doc["graph"]["degree"] = "3/1"
    with pytest.raises(ValidationRefusal):
        nio.parse_document(doc)


def test_bad_json_text():
    with pytest.raises(ParseError):
        nio.loads("{")


def test_toric_points():
    assert nio.parse_toric_point("(1/2,-3)") == (F(1, 2), F(-3))
    assert nio.parse_toric_point("(0)") == (F(0),)
    with pytest.raises(ParseError):
        nio.parse_toric_point("(a,b)")


def test_rational_strings():
    assert nio.qs(3) == "3/1"
    assert nio.qs(F(-4, 6)) == "-2/3"
