"""Piecewise-linear metrics on metric graphs and the dimension-one engine."""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .complex import (
    EdgePoint,
    MetricGraph,
    Subdivision,
    Vertex,
    fmt_q,
    refine,
    subdivide,
)
from .errors import DomainError, PreconditionError
from .linalg import solve_sparse
from .measure import AtomicMeasure

ZERO = Fraction(0)


def _interp(o1, v1, o2, v2, x):
    return v1 + (v2 - v1) * (x - o1) / (o2 - o1)


class PLMetric:
    """A continuous function on a metric graph, affine between breakpoints.

    ``values`` gives the value at every vertex; ``breakpoints`` maps an edge
    id to ``(offset, value)`` pairs strictly inside the edge. Collinear
    breakpoints are dropped so that equal functions compare equal.
    """

    __slots__ = ("host", "_values", "_bps", "_hash", "_vmap", "_bmap")

    def __init__(self, host: MetricGraph, values: Mapping, breakpoints: Mapping | None = None):
        self.host = host
        vals = {}
        for v in host.vertices:
            if v not in values:
                raise DomainError(f"missing value at vertex {v!r}")
            vals[v] = Fraction(values[v])
        bps = {}
        for eid, pts in (breakpoints or {}).items():
            e = host.edge(eid)
            pts = sorted((Fraction(o), Fraction(x)) for o, x in pts)
            prev = ZERO
            for o, _ in pts:
                if not prev < o < e.length:
                    raise DomainError(f"breakpoints on {eid!r} must be strictly interior and increasing")
                prev = o
            prof = [(ZERO, vals[e.tail])] + pts + [(e.length, vals[e.head])]
            kept = [prof[0]]
            for i in range(1, len(prof) - 1):
                (o0, v0), (o1, v1), (o2, v2) = kept[-1], prof[i], prof[i + 1]
                if (v1 - v0) * (o2 - o1) != (v2 - v1) * (o1 - o0):
                    kept.append(prof[i])
            if len(kept) > 1:
                bps[eid] = tuple(kept[1:])
        self._values = tuple(vals[v] for v in host.vertices)
        self._bps = tuple(sorted(bps.items()))
        self._hash = None
        self._vmap = vals
        self._bmap = bps

    # -- construction helpers -------------------------------------------------
    @classmethod
    def constant(cls, host: MetricGraph, c=0) -> PLMetric:
        return cls(host, {v: c for v in host.vertices})

    @classmethod
    def from_vertex_values(cls, host: MetricGraph, values: Mapping) -> PLMetric:
        return cls(host, values)

    @classmethod
    def from_function(cls, host: MetricGraph, f, points: Iterable = ()) -> PLMetric:
        """Sample ``f`` at the vertices and at the given edge points."""
        vals = {v: f(Vertex(v)) for v in host.vertices}
        bps: dict = {}
        for p in points:
            if isinstance(p, EdgePoint):
                bps.setdefault(p.edge, []).append((p.offset, f(p)))
        return cls(host, vals, bps)

    # -- access ---------------------------------------------------------------
    @property
    def values(self) -> dict:
        return dict(zip(self.host.vertices, self._values))

    @property
    def breakpoints(self) -> dict:
        return {e: list(p) for e, p in self._bps}

    def value_at_vertex(self, v: str) -> Fraction:
        return self._vmap[v]

    def profile(self, eid: str) -> list:
        """``(offset, value)`` along the edge, endpoints included."""
        e = self.host.edge(eid)
        vals = self._vmap
        inner = self._bmap.get(eid, ())
        return [(ZERO, vals[e.tail])] + list(inner) + [(e.length, vals[e.head])]

    def breakpoint_points(self) -> list:
        return [EdgePoint(e, o) for e, pts in self._bps for o, _ in pts]

    def points(self) -> list:
        """Vertices and breakpoints, in canonical order."""
        return [Vertex(v) for v in sorted(self.host.vertices)] + self.breakpoint_points()

    def __call__(self, p) -> Fraction:
        return self.evaluate(p)

    def evaluate(self, p) -> Fraction:
        if isinstance(p, Vertex):
            return self.value_at_vertex(p.id)
        if not isinstance(p, EdgePoint):
            raise DomainError(f"not a graph point: {p!r}")
        prof = self.profile(p.edge)
        x = Fraction(p.offset)
        if not 0 <= x <= prof[-1][0]:
            raise DomainError(f"offset {x} outside edge {p.edge!r}")
        for (o1, v1), (o2, v2) in zip(prof, prof[1:]):
            if o1 <= x <= o2:
                return _interp(o1, v1, o2, v2, x)
        raise AssertionError("unreachable")

    # -- equality -------------------------------------------------------------
    def _key(self):
        return (self._values, self._bps)

    def __eq__(self, other):
        if not isinstance(other, PLMetric):
            return NotImplemented
        return self.host == other.host and self._key() == other._key()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.host, self._key()))
        return self._hash

    def __repr__(self):
        parts = [f"{p.label}: {fmt_q(self(p))}" for p in self.points()]
        return "PLMetric(" + ", ".join(parts) + ")"

    # -- arithmetic -----------------------------------------------------------
    def _same_host(self, other):
        if other.host != self.host:
            raise DomainError("metrics live on different graphs")

    def combine_with(self, other: PLMetric, op, crossings: bool = False) -> PLMetric:
        """Apply ``op`` pointwise; with ``crossings`` also cut where the two differ in sign."""
        self._same_host(other)
        vals = {v: op(a, b) for v, a, b in zip(self.host.vertices, self._values, other._values)}
        bps: dict = {}
        for e in self.host.edges:
            pa, pb = self.profile(e.id), other.profile(e.id)
            offs = sorted({o for o, _ in pa} | {o for o, _ in pb})
            fa = _resample(pa, offs)
            fb = _resample(pb, offs)
            out = []
            for i, o in enumerate(offs):
                if 0 < o < e.length:
                    out.append((o, op(fa[i], fb[i])))
                if crossings and i + 1 < len(offs):
                    d1, d2 = fa[i] - fb[i], fa[i + 1] - fb[i + 1]
                    if (d1 > 0 > d2) or (d1 < 0 < d2):
                        x = o + (offs[i + 1] - o) * d1 / (d1 - d2)
                        out.append((x, _eval_profile(pa, x)))
            if out:
                bps[e.id] = out
        return PLMetric(self.host, vals, bps)

    def map_values(self, f) -> PLMetric:
        """Apply an affine map of the values (scaling, shifting)."""
        vals = {v: f(x) for v, x in zip(self.host.vertices, self._values)}
        bps = {e: [(o, f(x)) for o, x in pts] for e, pts in self._bps}
        return PLMetric(self.host, vals, bps)

    def __add__(self, other):
        if isinstance(other, PLMetric):
            return self.combine_with(other, lambda a, b: a + b)
        c = Fraction(other)
        return self.map_values(lambda x: x + c)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, PLMetric):
            return self.combine_with(other, lambda a, b: a - b)
        c = Fraction(other)
        return self.map_values(lambda x: x - c)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return self.map_values(lambda x: -x)

    def __mul__(self, c):
        c = Fraction(c)
        return self.map_values(lambda x: c * x)

    __rmul__ = __mul__

    def sup(self) -> Fraction:
        cands = list(self._values) + [x for _, pts in self._bps for _, x in pts]
        return max(cands)

    def inf(self) -> Fraction:
        cands = list(self._values) + [x for _, pts in self._bps for _, x in pts]
        return min(cands)

    def is_constant(self) -> bool:
        return not self._bps and len(set(self._values)) <= 1


def _eval_profile(prof, x):
    for (o1, v1), (o2, v2) in zip(prof, prof[1:]):
        if o1 <= x <= o2:
            return _interp(o1, v1, o2, v2, x)
    raise DomainError("offset outside edge")


def _resample(prof, offs):
    """Values of a profile at sorted offsets, in one pass."""
    out = []
    i = 0
    last = len(prof) - 2
    for x in offs:
        while i < last and prof[i + 1][0] < x:
            i += 1
        (o1, v1), (o2, v2) = prof[i], prof[i + 1]
        if x == o1:
            out.append(v1)
        elif x == o2:
            out.append(v2)
        else:
            out.append(_interp(o1, v1, o2, v2, x))
    return out


def evaluate(u: PLMetric, p) -> Fraction:
    return u.evaluate(p)


def lincomb(terms: Sequence) -> PLMetric:
    """``sum c_i u_i`` for ``(c_i, u_i)`` pairs."""
    terms = list(terms)
    acc = terms[0][1] * terms[0][0]
    for c, u in terms[1:]:
        acc = acc + u * c
    return acc


def maximum(*us: PLMetric) -> PLMetric:
    """Exact pointwise maximum; crossing points become breakpoints."""
    acc = us[0]
    for u in us[1:]:
        acc = acc.combine_with(u, max, crossings=True)
    return acc


def minimum(*us: PLMetric) -> PLMetric:
    acc = us[0]
    for u in us[1:]:
        acc = acc.combine_with(u, min, crossings=True)
    return acc


def fs_max(branches: Sequence, check: bool = True) -> PLMetric:
    """Evaluate a max-plus expression ``max_i (u_i + c_i)``.

    Every branch must itself be psh unless ``check`` is false.
    """
    if not branches:
        raise DomainError("a max-plus expression needs at least one branch")
    terms = []
    for u, c in branches:
        if check:
            ok, bad = is_psh(u)
            if not ok:
                raise PreconditionError("branch is not psh", bad)
        terms.append(u + c)
    return maximum(*terms)


# -- measures ------------------------------------------------------------------

def laplacian(u: PLMetric) -> AtomicMeasure:
    """Sum of outgoing slopes at every vertex and breakpoint."""
    g = u.host
    acc: dict = {}
    for e in g.edges:
        prof = u.profile(e.id)
        (o0, v0), (o1, v1) = prof[0], prof[1]
        acc[Vertex(e.tail)] = acc.get(Vertex(e.tail), ZERO) + (v1 - v0) / (o1 - o0)
        (oa, va), (ob, vb) = prof[-2], prof[-1]
        acc[Vertex(e.head)] = acc.get(Vertex(e.head), ZERO) + (va - vb) / (ob - oa)
        for i in range(1, len(prof) - 1):
            (pa, xa), (pb, xb), (pc, xc) = prof[i - 1], prof[i], prof[i + 1]
            acc[EdgePoint(e.id, pb)] = (xc - xb) / (pc - pb) + (xa - xb) / (pb - pa)
    return AtomicMeasure(acc)


def curvature(u: PLMetric) -> AtomicMeasure:
    """``reference + laplacian(u)``, unnormalized."""
    return u.host.reference_measure() + laplacian(u)


def ma_signed(u: PLMetric) -> AtomicMeasure:
    return curvature(u) / u.host.degree


def is_psh(u: PLMetric):
    """Return ``(flag, violations)``; violations are points of negative curvature."""
    bad = [p for p, m in curvature(u).items() if m < 0]
    return (not bad, bad)


def ma(u: PLMetric) -> AtomicMeasure:
    """Monge-Ampère measure ``(reference + laplacian(u)) / V``."""
    ok, bad = is_psh(u)
    if not ok:
        labels = ", ".join(p.label for p in bad)
        raise PreconditionError(f"metric is not psh (negative curvature at {labels})", bad)
    return ma_signed(u)


# -- lifting along refinements ---------------------------------------------------

def lift_metric(u: PLMetric, s: Subdivision) -> PLMetric:
    """Pull ``u`` back along the retraction of ``s``."""
    if u.host != s.source:
        raise DomainError("metric does not live on the subdivision source")
    t = s.target
    vals = {v: u(s.retract(Vertex(v))) for v in t.vertices}
    bps: dict = {}
    for te in t.edges:
        h = s.host[te.id]
        if h[0] != "edge":
            continue
        start = h[2]
        inner = [(o - start, x) for o, x in u.profile(h[1])[1:-1] if start < o < start + te.length]
        if inner:
            bps[te.id] = inner
    return PLMetric(t, vals, bps)


def descend_metric(w: PLMetric, s: Subdivision) -> PLMetric:
    """Express a metric on a pure subdivision target on the source graph."""
    if not s.is_pure:
        raise DomainError("descent needs a subdivision without grafts")
    if w.host != s.target:
        raise DomainError("metric does not live on the subdivision target")
    g = s.source
    vals = {v: w.value_at_vertex(v) for v in g.vertices}
    bps: dict = {}
    for e in g.edges:
        out = []
        for te in s.pieces(e.id):
            start = s.host[te][2]
            prof = w.profile(te)
            for o, x in prof[1:]:
                if start + o < e.length:
                    out.append((start + o, x))
        if out:
            bps[e.id] = out
    return PLMetric(g, vals, bps)


def refines(s: Subdivision, u: PLMetric) -> bool:
    """True when every breakpoint of ``u`` is a vertex of ``s.target``."""
    return all(isinstance(s.lift(p), Vertex) for p in u.breakpoint_points())


# -- linear solves ---------------------------------------------------------------

def _laplacian_rows(g: MetricGraph) -> dict:
    """Rows of the vertex Laplacian: ``(L u)(v) = sum (u(w) - u(v)) / len``."""
    rows: dict = {v: {} for v in g.vertices}
    for e in g.edges:
        if e.tail == e.head:
            continue
        w = 1 / e.length
        a, b = e.tail, e.head
        rows[a][a] = rows[a].get(a, ZERO) - w
        rows[b][b] = rows[b].get(b, ZERO) - w
        rows[a][b] = rows[a].get(b, ZERO) + w
        rows[b][a] = rows[b].get(a, ZERO) + w
    return rows


def _poisson_vertices(g: MetricGraph, rhs: Mapping) -> dict:
    """Solve ``L u = rhs`` on vertices with ``u(first vertex) = 0``."""
    if sum(rhs.values(), ZERO) != 0:
        raise DomainError("right-hand side must have total mass zero")
    pin = g.vertices[0]
    if len(g.vertices) == 1:
        return {pin: ZERO}
    rows = _laplacian_rows(g)
    red = {v: {w: c for w, c in r.items() if w != pin} for v, r in rows.items() if v != pin}
    sol = solve_sparse(red, {v: rhs.get(v, ZERO) for v in red})
    sol[pin] = ZERO
    return sol


def poisson(g: MetricGraph, sigma: AtomicMeasure) -> PLMetric:
    """A function ``f`` with ``laplacian(f) = sigma`` (total mass 0), unique up to constants."""
    pts = [p for p in sigma if isinstance(p, EdgePoint)]
    for p in sigma:
        g.check_point(p)
    s = subdivide(g, pts)
    rhs = {s.lift(p).id: m for p, m in sigma.items()}
    vals = _poisson_vertices(s.target, rhs)
    return descend_metric(PLMetric(s.target, vals), s)


def solve(mu: AtomicMeasure, g: MetricGraph) -> PLMetric:
    """Exact solution of ``ma(u) = mu`` normalized by ``sup u = 0``."""
    if not mu.is_positive():
        raise PreconditionError("measure has negative masses")
    if mu.total_mass() != 1:
        raise PreconditionError(f"measure is not a probability measure (total {mu.total_mass()})")
    sigma = mu * g.degree - g.reference_measure()
    u = poisson(g, sigma)
    return u - u.sup()


# -- envelopes -------------------------------------------------------------------

def _grid_state(psi: PLMetric, grid: Subdivision):
    if psi.host != grid.source:
        raise DomainError("obstacle does not live on the grid source")
    if not grid.is_pure:
        raise DomainError("envelope grids must be plain subdivisions")
    if not refines(grid, psi):
        raise PreconditionError("grid does not refine the obstacle's breakpoints",
                                [p for p in psi.breakpoint_points() if not isinstance(grid.lift(p), Vertex)])
    return lift_metric(psi, grid)


def envelope_data(psi: PLMetric, grid: Subdivision):
    """Solve the obstacle problem on the grid; returns ``(u_target, x, y, iterations)``.

    With ``x = psi - u`` and ``y = reference + laplacian(u)`` at grid vertices
    the problem is the linear complementarity system ``x, y >= 0, x.y = 0``
    for the Z-matrix ``-laplacian``. The least solution is found by
    Chandrasekaran's method, which adds all currently violated vertices at once
    and re-solves; ``x`` grows monotonically and at most ``|V|`` rounds occur.
    """
    pt = _grid_state(psi, grid)
    t = grid.target
    rows = _laplacian_rows(t)
    q = {v: c for v, c in curvature(pt).items()}
    q = {v: q.get(Vertex(v), ZERO) for v in t.vertices}
    x = {v: ZERO for v in t.vertices}
    active: set = set()
    rounds = 0
    while True:
        y = {v: q[v] - sum((c * x[w] for w, c in rows[v].items()), ZERO) for v in t.vertices}
        neg = {v for v in t.vertices if v not in active and y[v] < 0}
        if not neg:
            break
        rounds += 1
        active |= neg
        if len(active) == len(t.vertices):
            raise AssertionError("obstacle problem lost its free vertex")
        sub = {v: {w: -c for w, c in rows[v].items() if w in active} for v in active}
        xs = solve_sparse(sub, {v: -q[v] for v in active})
        for v in active:
            if xs[v] < x[v]:
                raise AssertionError("non-monotone complementarity step")
            x[v] = xs[v]
    u_t = PLMetric(t, {v: pt.value_at_vertex(v) - x[v] for v in t.vertices})
    return u_t, x, y, rounds


def envelope(psi: PLMetric, grid: Subdivision) -> PLMetric:
    """Largest grid-PL psh metric lying below ``psi`` at the grid vertices."""
    u_t, _, _, _ = envelope_data(psi, grid)
    return descend_metric(u_t, grid)


def orthogonality_defect(psi: PLMetric, grid: Subdivision) -> Fraction:
    """``integral of (psi - P(psi)) against ma(P(psi))``; zero by complementarity."""
    u = envelope(psi, grid)
    return ma(u).integrate(lambda p: psi(p) - u(p))


# -- potential-theoretic constants --------------------------------------------------

def effective_resistance(g: MetricGraph, x1, x2) -> Fraction:
    """Effective resistance between two points of the graph."""
    if x1 == x2:
        return ZERO
    j = poisson(g, AtomicMeasure({x1: 1, x2: -1}))
    return abs(j(x1) - j(x2))


def izumi_bound(g: MetricGraph, x1, x2) -> Fraction:
    """Uniform bound on ``|u(x1) - u(x2)|`` over psh ``u``: ``V`` times resistance."""
    return g.degree * effective_resistance(g, x1, x2)


def d_ref(g: MetricGraph, reference: PLMetric | None = None) -> Fraction:
    """Exact sharp constant in ``sup(u - ref) - int (u - ref) ma(ref) <= D``.

    Writing ``nu = ma(ref)`` and ``G_x`` for the potential with
    ``laplacian G_x = delta_x - nu``, the left side equals
    ``V * (int G_x dma(u) - int G_x dnu)`` at a maximum point ``x`` of
    ``u - ref``. Both extremes are attained on the support of ``nu``.
    """
    ref = reference if reference is not None else PLMetric.constant(g)
    nu = ma(ref)
    supp = list(nu)
    best = ZERO
    for x in supp:
        G = poisson(g, AtomicMeasure({x: 1}) - nu)
        mean = nu.integrate(G)
        best = max(best, max(G(y) - mean for y in supp))
    return g.degree * best


# -- engine ---------------------------------------------------------------------------

class GraphEngine:
    """Monge-Ampère engine on a metric graph (``n = 1``)."""

    n = 1
    exact = True
    name = "graph"

    def __init__(self, graph: MetricGraph, reference: PLMetric | None = None):
        graph.require_valid()
        self.graph = graph
        self.reference = reference if reference is not None else PLMetric.constant(graph)
        ok, bad = is_psh(self.reference)
        if not ok:
            raise PreconditionError("reference metric is not psh", bad)
        self._ma: dict = {}
        self._dref = None

    @property
    def V(self) -> Fraction:
        return self.graph.degree

    def owns(self, phi) -> bool:
        return isinstance(phi, PLMetric) and phi.host == self.graph

    def ma_mixed(self, metrics: Sequence[PLMetric]) -> AtomicMeasure:
        if len(metrics) != 1:
            raise DomainError("graph engine takes exactly one metric")
        u = metrics[0]
        m = self._ma.get(u)
        if m is None:
            m = ma_signed(u)
            self._ma[u] = m
        return m

    def ma(self, u: PLMetric) -> AtomicMeasure:
        return ma(u)

    def integrate(self, phi, psi, mu: AtomicMeasure) -> Fraction:
        return mu.integrate(lambda p: phi(p) - psi(p))

    def is_psh(self, phi) -> bool:
        return is_psh(phi)[0]

    def combine(self, phi, psi, t) -> PLMetric:
        t = Fraction(t)
        return phi * t + psi * (1 - t)

    def shift(self, phi, c) -> PLMetric:
        return phi + Fraction(c)

    def sup_diff(self, phi) -> Fraction:
        return (phi - self.reference).sup()

    @property
    def d_ref(self) -> Fraction:
        if self._dref is None:
            self._dref = d_ref(self.graph, self.reference)
        return self._dref

    def solve(self, mu: AtomicMeasure) -> PLMetric:
        u = solve(mu, self.graph)
        return u - self.sup_diff(u)

    def solve_residual(self, mu, u) -> Fraction:
        diff = ma(u) - mu
        return max((abs(m) for m in diff.values()), default=ZERO)

    def point_label(self, p) -> str:
        return p.label

    def zero(self) -> PLMetric:
        return self.reference
