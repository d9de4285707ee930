"""Metric graphs, points on them, and refinements with retractions."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import DomainError
from .measure import AtomicMeasure


def fmt_q(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Vertex:
    id: str

    def sort_key(self):
        return (0, self.id, Fraction(0))

    @property
    def label(self) -> str:
        return self.id

    def __repr__(self):
        return f"Vertex({self.id!r})"


@dataclass(frozen=True)
class EdgePoint:
    """A point strictly inside an edge, ``offset`` measured from the tail."""

    edge: str
    offset: Fraction

    def sort_key(self):
        return (1, self.edge, self.offset)

    @property
    def label(self) -> str:
        return f"{self.edge}@{fmt_q(self.offset)}"

    def __repr__(self):
        return f"EdgePoint({self.edge!r}, {fmt_q(self.offset)})"


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    length: Fraction


@dataclass(frozen=True, eq=False)
class MetricGraph:
    """Connected graph with rational edge lengths and a vertex reference measure.

    The constructor does not enforce the invariants; call
    :func:`validate_graph` or :meth:`require_valid`.
    """

    vertices: tuple
    edges: tuple  # of Edge
    reference: tuple  # sorted (vertex id, mass) pairs
    degree: Fraction
    _index: dict = field(default=None, repr=False, compare=False)

    def __init__(self, vertices, edges, reference, degree=None):
        verts = tuple(str(v) for v in vertices)
        es = []
        for e in edges:
            if isinstance(e, Edge):
                es.append(Edge(e.id, e.tail, e.head, Fraction(e.length)))
            else:
                eid, t, h, ln = e
                es.append(Edge(str(eid), str(t), str(h), Fraction(ln)))
        ref = dict(reference.items() if isinstance(reference, Mapping) else reference)
        ref = tuple(sorted((str(v), Fraction(m)) for v, m in ref.items() if Fraction(m) != 0))
        deg = Fraction(degree) if degree is not None else sum((m for _, m in ref), Fraction(0))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", tuple(es))
        object.__setattr__(self, "reference", ref)
        object.__setattr__(self, "degree", deg)
        object.__setattr__(self, "_index", {e.id: e for e in es})

    def _key(self):
        return (self.vertices, self.edges, self.reference, self.degree)

    def __eq__(self, other):
        return isinstance(other, MetricGraph) and self._key() == other._key()

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash(self._key())
            object.__setattr__(self, "_hash", h)
        return h

    @property
    def V(self) -> Fraction:
        return self.degree

    def edge(self, eid: str) -> Edge:
        try:
            return self._index[eid]
        except KeyError:
            raise DomainError(f"unknown edge {eid!r}") from None

    def has_edge(self, eid: str) -> bool:
        return eid in self._index

    def reference_mass(self, v: str) -> Fraction:
        return dict(self.reference).get(v, Fraction(0))

    def reference_measure(self) -> AtomicMeasure:
        return AtomicMeasure({Vertex(v): m for v, m in self.reference})

    def incident(self, v: str):
        """Yield ``(edge, at_tail)`` for each edge end at ``v``; loops yield twice."""
        for e in self.edges:
            if e.tail == v:
                yield e, True
            if e.head == v:
                yield e, False

    def total_length(self) -> Fraction:
        return sum((e.length for e in self.edges), Fraction(0))

    def point(self, edge: str, offset) -> Vertex | EdgePoint:
        """Normalize an edge offset, mapping the endpoints to vertices."""
        e = self.edge(edge)
        offset = Fraction(offset)
        if offset < 0 or offset > e.length:
            raise DomainError(f"offset {offset} outside edge {edge!r} of length {e.length}")
        if offset == 0:
            return Vertex(e.tail)
        if offset == e.length:
            return Vertex(e.head)
        return EdgePoint(edge, offset)

    def check_point(self, p) -> None:
        if isinstance(p, Vertex):
            if p.id not in self.vertices:
                raise DomainError(f"vertex {p.id!r} not on graph")
        elif isinstance(p, EdgePoint):
            e = self.edge(p.edge)
            if not 0 < p.offset < e.length:
                raise DomainError(f"point {p.label} not strictly inside its edge")
        else:
            raise DomainError(f"not a graph point: {p!r}")

    def parse_point(self, label: str):
        """Inverse of ``label``: a vertex id, or ``edge@offset``."""
        if label in self.vertices:
            return Vertex(label)
        if "@" in label:
            eid, _, off = label.rpartition("@")
            if self.has_edge(eid):
                try:
                    q = Fraction(off)
                except (ValueError, ZeroDivisionError):
                    raise DomainError(f"bad offset in {label!r}") from None
                return self.point(eid, q)
        raise DomainError(f"point {label!r} not on graph")

    def require_valid(self) -> None:
        from .errors import ValidationRefusal
        diags = validate_graph(self)
        if diags:
            raise ValidationRefusal("; ".join(diags))


def validate_graph(g: MetricGraph) -> list:
    """Return one diagnostic string per violated invariant (empty if valid)."""
    diags = []
    vset = set(g.vertices)
    if len(vset) != len(g.vertices):
        diags.append("duplicate vertex ids")
    if len({e.id for e in g.edges}) != len(g.edges):
        diags.append("duplicate edge ids")
    for e in g.edges:
        if e.tail not in vset or e.head not in vset:
            diags.append(f"edge {e.id} has an unknown endpoint")
        if e.length <= 0:
            diags.append(f"edge {e.id} has non-positive length")
    for v, m in g.reference:
        if v not in vset:
            diags.append(f"reference atom at unknown vertex {v}")
        if m < 0:
            diags.append(f"negative reference mass at {v}")
    if g.degree <= 0:
        diags.append("V must be positive")
    if sum((m for _, m in g.reference), Fraction(0)) != g.degree:
        diags.append("reference mass ≠ V")
    if g.vertices:
        adj: dict = {v: set() for v in g.vertices}
        for e in g.edges:
            if e.tail in adj and e.head in adj:
                adj[e.tail].add(e.head)
                adj[e.head].add(e.tail)
        seen = {g.vertices[0]}
        stack = [g.vertices[0]]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != len(vset):
            diags.append("graph not connected")
    else:
        diags.append("graph has no vertices")
    return diags


@dataclass(frozen=True)
class Subdivision:
    """A refinement ``target`` of ``source`` together with its retraction.

    ``host`` maps each target edge either to ``("edge", source_edge, start)``
    (the piece of a source edge starting at offset ``start``, same orientation)
    or to ``("collapse", source_point)`` for grafted edges, which retract onto
    a single point. ``vertex_map`` sends every target vertex to its image on
    the source.
    """

    source: MetricGraph
    target: MetricGraph
    host: dict
    vertex_map: dict

    @property
    def is_pure(self) -> bool:
        """True when no grafted edges are present (a plain subdivision)."""
        return all(h[0] == "edge" for h in self.host.values())

    def retract(self, p):
        """Image on the source of a target point."""
        if isinstance(p, Vertex):
            return self.vertex_map[p.id]
        h = self.host[p.edge]
        if h[0] == "collapse":
            return h[1]
        return self.source.point(h[1], h[2] + p.offset)

    def lift(self, p):
        """The target point lying over a source point (inverse of retract off grafts)."""
        if isinstance(p, Vertex):
            return Vertex(p.id)
        self.source.check_point(p)
        best = None
        for te, h in self.host.items():
            if h[0] == "edge" and h[1] == p.edge and h[2] <= p.offset:
                if best is None or h[2] > best[1]:
                    best = (te, h[2])
        te, start = best
        return self.target.point(te, p.offset - start)

    def embed(self, v: str) -> str:
        return v

    def pieces(self, eid: str) -> list:
        """Target edges covering source edge ``eid``, ordered by start offset."""
        out = [(h[2], te) for te, h in self.host.items() if h[0] == "edge" and h[1] == eid]
        return [te for _, te in sorted(out)]


def _q_label(q: Fraction) -> str:
    return fmt_q(q)


def refine(g: MetricGraph, points: Iterable = (), grafts: Iterable = ()) -> Subdivision:
    """Insert vertices at ``points`` and graft leaf edges.

    ``grafts`` is a list of ``(point, length)``; each adds a new leaf vertex
    joined to ``point`` by an edge of the given length. Grafted edges carry
    no reference mass and retract onto their attachment point. Inserted
    vertices are named ``edge@offset`` and edge pieces ``edge.k``.
    """
    points = list(points)
    grafts = [(p, Fraction(ln)) for p, ln in grafts]
    for p in points:
        g.check_point(p)
    if len(set(points)) != len(points):
        raise DomainError("subdivision points must be pairwise distinct")
    for p, ln in grafts:
        g.check_point(p)
        if ln <= 0:
            raise DomainError("graft length must be positive")
    cut = set(points) | {p for p, _ in grafts}
    by_edge: dict = {}
    for p in cut:
        if isinstance(p, EdgePoint):
            by_edge.setdefault(p.edge, []).append(p.offset)
    vertices = list(g.vertices)
    vertex_map = {v: Vertex(v) for v in g.vertices}
    edges = []
    host = {}
    taken = set(g.vertices) | {e.id for e in g.edges}

    def fresh(name):
        if name in taken:
            raise DomainError(f"name clash while refining: {name!r}")
        taken.add(name)
        return name

    for e in g.edges:
        offs = sorted(by_edge.get(e.id, []))
        if not offs:
            edges.append(Edge(e.id, e.tail, e.head, e.length))
            host[e.id] = ("edge", e.id, Fraction(0))
            continue
        names = []
        for o in offs:
            name = fresh(f"{e.id}@{_q_label(o)}")
            vertices.append(name)
            vertex_map[name] = EdgePoint(e.id, o)
            names.append(name)
        stops = [e.tail] + names + [e.head]
        cuts = [Fraction(0)] + offs + [e.length]
        for k in range(len(stops) - 1):
            pid = fresh(f"{e.id}.{k}")
            edges.append(Edge(pid, stops[k], stops[k + 1], cuts[k + 1] - cuts[k]))
            host[pid] = ("edge", e.id, cuts[k])
    sub_names = {}
    for p in cut:
        sub_names[p] = p.id if isinstance(p, Vertex) else f"{p.edge}@{_q_label(p.offset)}"
    counts: dict = {}
    for p, ln in grafts:
        base = sub_names[p]
        k = counts.get(base, 0)
        while f"{base}+{k}" in taken or f"{base}~{k}" in taken:
            k += 1
        counts[base] = k + 1
        leaf = fresh(f"{base}+{k}")
        eid = fresh(f"{base}~{k}")
        vertices.append(leaf)
        vertex_map[leaf] = p
        edges.append(Edge(eid, base, leaf, ln))
        host[eid] = ("collapse", p)
    target = MetricGraph(vertices, edges, dict(g.reference), g.degree)
    return Subdivision(g, target, host, vertex_map)


def subdivide(g: MetricGraph, points: Iterable = ()) -> Subdivision:
    """Pure subdivision inserting vertices at the given points."""
    return refine(g, points)


def graft(g: MetricGraph, grafts: Iterable) -> Subdivision:
    return refine(g, (), grafts)


def identity(g: MetricGraph) -> Subdivision:
    return refine(g)


def uniform_grid(g: MetricGraph, k: int, extra_points: Iterable = ()) -> Subdivision:
    """Split every edge into ``k`` equal cells, also cutting at ``extra_points``."""
    if k < 1:
        raise DomainError("grid resolution must be at least 1")
    pts = set()
    for e in g.edges:
        for i in range(1, k):
            pts.add(EdgePoint(e.id, e.length * i / k))
    for p in extra_points:
        g.check_point(p)
        if isinstance(p, EdgePoint):
            pts.add(p)
    return refine(g, sorted(pts, key=lambda p: p.sort_key()))


def compose(s1: Subdivision, s2: Subdivision) -> Subdivision:
    """Chain ``s1: A -> B`` and ``s2: B -> C`` into ``A -> C``."""
    if s2.source != s1.target:
        raise DomainError("subdivisions do not chain")
    host = {}
    for te, h in s2.host.items():
        if h[0] == "collapse":
            host[te] = ("collapse", s1.retract(h[1]))
            continue
        h1 = s1.host[h[1]]
        if h1[0] == "collapse":
            host[te] = ("collapse", h1[1])
        else:
            host[te] = ("edge", h1[1], h1[2] + h[2])
    vmap = {v: s1.retract(p) for v, p in s2.vertex_map.items()}
    return Subdivision(s1.source, s2.target, host, vmap)


def pushforward_measure(mu: AtomicMeasure, s: Subdivision) -> AtomicMeasure:
    """Push a measure on ``s.target`` down to ``s.source`` along the retraction."""
    return mu.pushforward(s.retract)


def lift_measure(mu: AtomicMeasure, s: Subdivision) -> AtomicMeasure:
    """Transport a measure on ``s.source`` atom by atom to ``s.target``."""
    return mu.pushforward(s.lift)
