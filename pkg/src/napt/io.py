"""JSON problem documents: parsing, validation and canonical serialization."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction

import jsonschema

from .algebra import AlgebraEngine, ModelMetric, RestrictionAlgebra
from .complex import MetricGraph
from .errors import DomainError, NaptError, ParseError
from .graph import GraphEngine, PLMetric
from .measure import AtomicMeasure
from .toric import (
    Affine,
    LatticePolytope,
    MaxOf,
    MinOf,
    Obstacle,
    ToricEngine,
    TropicalMetric,
)

VERSION = 1

_RAT = {"oneOf": [{"type": "integer"},
                  {"type": "string", "pattern": r"^-?[0-9]+(/[0-9]+)?$"}]}
_MEASURES = {"type": "object",
             "additionalProperties": {"type": "object", "additionalProperties": _RAT}}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["napt_version", "kind"],
    "properties": {
        "napt_version": {"const": VERSION},
        "kind": {"enum": ["metric_graph", "toric", "algebra"]},
        "tasks": {},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "metric_graph"}}},
         "then": {
             "required": ["graph"],
             "properties": {
                 "graph": {
                     "type": "object",
                     "required": ["vertices", "edges", "reference", "degree"],
                     "additionalProperties": False,
                     "properties": {
                         "vertices": {"type": "array", "items": {"type": "string"}},
                         "edges": {"type": "array", "items": {
                             "type": "object",
                             "required": ["id", "tail", "head", "length"],
                             "additionalProperties": False,
                             "properties": {"id": {"type": "string"}, "tail": {"type": "string"},
                                            "head": {"type": "string"}, "length": _RAT}}},
                         "reference": {"type": "object", "additionalProperties": _RAT},
                         "degree": _RAT,
                     }},
                 "reference_metric": {"type": "string"},
                 "metrics": {"type": "object", "additionalProperties": {
                     "type": "object",
                     "required": ["values"],
                     "additionalProperties": False,
                     "properties": {
                         "values": {"type": "object", "additionalProperties": _RAT},
                         "breakpoints": {"type": "object", "additionalProperties": {
                             "type": "array",
                             "items": {"type": "array", "items": _RAT, "minItems": 2, "maxItems": 2}}},
                     }}},
                 "measures": _MEASURES,
             }}},
        {"if": {"properties": {"kind": {"const": "toric"}}},
         "then": {
             "required": ["polytope"],
             "properties": {
                 "polytope": {"type": "array", "items": {"type": "array", "items": _RAT}},
                 "tolerance": {"type": "number"},
                 "metrics": {"type": "object", "additionalProperties": {
                     "type": "object", "required": ["pieces"], "additionalProperties": False,
                     "properties": {"pieces": {"type": "array", "items": {
                         "type": "array", "minItems": 2, "maxItems": 2,
                         "prefixItems": [{"type": "array", "items": _RAT}, _RAT]}}}}},
                 "measures": _MEASURES,
                 "obstacles": {"type": "object", "additionalProperties": {"$ref": "#/$defs/tree"}},
             }}},
        {"if": {"properties": {"kind": {"const": "algebra"}}},
         "then": {
             "required": ["n", "degree", "components"],
             "properties": {
                 "n": {"type": "integer", "minimum": 1},
                 "degree": _RAT,
                 "components": {"type": "array", "items": {
                     "type": "object", "required": ["name", "multiplicity", "table"],
                     "additionalProperties": False,
                     "properties": {"name": {"type": "string"}, "multiplicity": _RAT,
                                    "table": {"type": "array"}}}},
                 "values": {"type": "array", "items": {"type": "array", "items": _RAT}},
                 "constant": {"type": "array", "items": _RAT},
                 "d_ref": _RAT,
                 "metrics": {"type": "object", "additionalProperties": {"type": "array", "items": _RAT}},
                 "measures": _MEASURES,
             }}},
    ],
    "$defs": {
        "tree": {"oneOf": [
            {"type": "object", "required": ["affine"], "additionalProperties": False,
             "properties": {"affine": {"type": "object", "required": ["slope", "const"],
                                       "additionalProperties": False,
                                       "properties": {"slope": {"type": "array", "items": _RAT},
                                                      "const": _RAT}}}},
            {"type": "object", "required": ["max"], "additionalProperties": False,
             "properties": {"max": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/tree"}}}},
            {"type": "object", "required": ["min"], "additionalProperties": False,
             "properties": {"min": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/tree"}}}},
        ]},
    },
}


def q(x) -> Fraction:
    try:
        return Fraction(x)
    except (ValueError, ZeroDivisionError, TypeError):
        raise ParseError(f"not an exact rational: {x!r}") from None


def qs(x) -> str:
    """Canonical rational string ``p/q`` (denominator always written)."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


_TORIC_POINT = re.compile(r"^\((.*)\)$")


def parse_toric_point(label: str) -> tuple:
    m = _TORIC_POINT.match(label.strip())
    body = m.group(1) if m else label
    try:
        return tuple(q(c.strip()) for c in body.split(","))
    except ParseError:
        raise ParseError(f"bad toric point {label!r}") from None


@dataclass
class Problem:
    kind: str
    engine: object
    metrics: dict = field(default_factory=dict)
    measures: dict = field(default_factory=dict)
    obstacles: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def metric(self, name):
        from .errors import PreconditionError
        if name not in self.metrics:
            raise PreconditionError(f"unknown metric {name!r}")
        return self.metrics[name]

    def measure(self, name):
        from .errors import PreconditionError
        if name not in self.measures:
            raise PreconditionError(f"unknown measure {name!r}")
        return self.measures[name]


def _tree(node) -> Obstacle:
    if "affine" in node:
        return Affine([q(x) for x in node["affine"]["slope"]], q(node["affine"]["const"]))
    if "max" in node:
        return MaxOf([_tree(c) for c in node["max"]])
    return MinOf([_tree(c) for c in node["min"]])


def _tree_json(t: Obstacle):
    if isinstance(t, Affine):
        return {"affine": {"slope": [qs(x) for x in t.slope], "const": qs(t.const)}}
    key = "max" if isinstance(t, MaxOf) else "min"
    return {key: [_tree_json(c) for c in t.children]}


def _graph_measure(g: MetricGraph, d: dict) -> AtomicMeasure:
    return AtomicMeasure([(g.parse_point(lbl), q(m)) for lbl, m in d.items()])


def parse_document(doc: dict) -> Problem:
    """Validate a decoded JSON document and build the engine and named objects."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise ParseError(f"schema violation at '{path}': {exc.message}") from None
    kind = doc["kind"]
    try:
        if kind == "metric_graph":
            return _parse_graph(doc)
        if kind == "toric":
            return _parse_toric(doc)
        return _parse_algebra(doc)
    except DomainError as exc:
        raise ParseError(f"malformed document: {exc}") from None
    except NaptError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ParseError(f"malformed document: {exc}") from None


def _parse_graph(doc) -> Problem:
    gd = doc["graph"]
    g = MetricGraph(gd["vertices"],
                    [(e["id"], e["tail"], e["head"], q(e["length"])) for e in gd["edges"]],
                    {v: q(m) for v, m in gd["reference"].items()}, q(gd["degree"]))
    metrics = {}
    for name, md in doc.get("metrics", {}).items():
        vals = {v: q(x) for v, x in md["values"].items()}
        bps = {e: [(q(o), q(x)) for o, x in pts] for e, pts in md.get("breakpoints", {}).items()}
        metrics[name] = PLMetric(g, vals, bps)
    ref = None
    if "reference_metric" in doc:
        ref = metrics.get(doc["reference_metric"])
        if ref is None:
            raise ParseError(f"reference metric {doc['reference_metric']!r} is not defined")
    engine = GraphEngine(g, ref)
    measures = {n: _graph_measure(g, d) for n, d in doc.get("measures", {}).items()}
    return Problem("metric_graph", engine, metrics, measures, {}, doc)


def _parse_toric(doc) -> Problem:
    P = LatticePolytope([[q(c) for c in v] for v in doc["polytope"]])
    engine = ToricEngine(P, doc.get("tolerance", 1e-9))
    metrics = {}
    for name, md in doc.get("metrics", {}).items():
        metrics[name] = TropicalMetric(P, [([q(c) for c in a], q(lam)) for a, lam in md["pieces"]])
    measures = {}
    for name, d in doc.get("measures", {}).items():
        measures[name] = AtomicMeasure([(parse_toric_point(k), q(m)) for k, m in d.items()])
    obstacles = {name: _tree(t) for name, t in doc.get("obstacles", {}).items()}
    return Problem("toric", engine, metrics, measures, obstacles, doc)


def _parse_algebra(doc) -> Problem:
    comps = doc["components"]
    alg = RestrictionAlgebra(
        doc["n"], q(doc["degree"]),
        [c["name"] for c in comps],
        [q(c["multiplicity"]) for c in comps],
        [c["table"] for c in comps],
        values=[[q(x) for x in r] for r in doc["values"]] if "values" in doc else None,
        d_ref=q(doc["d_ref"]) if "d_ref" in doc else None,
        constant=[q(x) for x in doc["constant"]] if "constant" in doc else None,
    )
    engine = AlgebraEngine(alg)
    metrics = {name: ModelMetric([q(x) for x in v]) for name, v in doc.get("metrics", {}).items()}
    measures = {name: AtomicMeasure({k: q(m) for k, m in d.items()})
                for name, d in doc.get("measures", {}).items()}
    return Problem("algebra", engine, metrics, measures, {}, doc)


def loads(text: str) -> Problem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    return parse_document(doc)


def load(path) -> Problem:
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None


# -- serialization --------------------------------------------------------------------

def metric_json(u) -> object:
    if isinstance(u, PLMetric):
        out = {"values": {v: qs(x) for v, x in u.values.items()}}
        bps = {e: [[qs(o), qs(x)] for o, x in pts] for e, pts in u.breakpoints.items()}
        if bps:
            out["breakpoints"] = bps
        return out
    if isinstance(u, TropicalMetric):
        return {"pieces": [[[qs(c) for c in a], qs(lam)] for a, lam in u.pieces]}
    if isinstance(u, ModelMetric):
        return [qs(x) for x in u.coeffs]
    raise TypeError(f"cannot serialize {type(u).__name__}")


def measure_json(mu: AtomicMeasure, engine) -> dict:
    return {engine.point_label(p): qs(m) for p, m in mu.items()}


def _table_json(t):
    if hasattr(t, "tolist"):
        t = t.tolist()
    if isinstance(t, list):
        return [_table_json(x) for x in t]
    return qs(t)


def problem_json(pr: Problem) -> dict:
    """Canonical JSON object for a parsed problem."""
    eng = pr.engine
    doc: dict = {"napt_version": VERSION, "kind": pr.kind}
    if pr.kind == "metric_graph":
        g = eng.graph
        doc["graph"] = {
            "vertices": list(g.vertices),
            "edges": [{"id": e.id, "tail": e.tail, "head": e.head, "length": qs(e.length)} for e in g.edges],
            "reference": {v: qs(m) for v, m in g.reference},
            "degree": qs(g.degree),
        }
        if "reference_metric" in pr.raw:
            doc["reference_metric"] = pr.raw["reference_metric"]
    elif pr.kind == "toric":
        doc["polytope"] = [[qs(c) for c in v] for v in eng.P.vertices]
        if "tolerance" in pr.raw:
            doc["tolerance"] = pr.raw["tolerance"]
        if pr.obstacles:
            doc["obstacles"] = {k: _tree_json(t) for k, t in pr.obstacles.items()}
    else:
        alg = eng.alg
        doc["n"] = alg.n
        doc["degree"] = qs(alg.V)
        doc["components"] = [{"name": nm, "multiplicity": qs(b), "table": _table_json(t)}
                             for nm, b, t in zip(alg.names, alg.b, alg.tables)]
        if not alg.default_values:
            doc["values"] = [[qs(x) for x in r] for r in alg.W]
        if "constant" in pr.raw:
            doc["constant"] = [qs(x) for x in alg.constant]
        if alg.d_ref_value is not None:
            doc["d_ref"] = qs(alg.d_ref_value)
    if pr.metrics:
        doc["metrics"] = {k: metric_json(u) for k, u in pr.metrics.items()}
    if pr.measures:
        doc["measures"] = {k: measure_json(m, eng) for k, m in pr.measures.items()}
    if "tasks" in pr.raw:
        doc["tasks"] = pr.raw["tasks"]
    return doc


def dumps(obj) -> str:
    if isinstance(obj, Problem):
        obj = problem_json(obj)
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
