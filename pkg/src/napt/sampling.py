"""Seeded generators for graphs, psh metrics and measures."""
from __future__ import annotations

import random
from fractions import Fraction

from .complex import EdgePoint, MetricGraph, Vertex
from .graph import GraphEngine, PLMetric, maximum, solve
from .measure import AtomicMeasure
from .toric import LatticePolytope, TropicalMetric

CONSTS = sorted({Fraction(a, b) for a in range(-3, 4) for b in (1, 2, 3)})
LENGTHS = [Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2), Fraction(1, 3), Fraction(2, 3)]
T_VALUES = [Fraction(0), Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(3, 4), Fraction(1)]


def rng_for(seed) -> random.Random:
    return random.Random(seed)


def random_graph(rng: random.Random, max_vertices: int = 12, max_extra: int = 3) -> MetricGraph:
    """Random connected graph: a random tree plus a few extra edges (loops allowed)."""
    k = rng.randint(1, max_vertices)
    names = [f"v{i}" for i in range(k)]
    edges = []
    for i in range(1, k):
        edges.append((f"e{len(edges)}", names[rng.randrange(i)], names[i], rng.choice(LENGTHS)))
    for _ in range(rng.randint(0 if k > 1 else 1, max_extra)):
        a, b = rng.choice(names), rng.choice(names)
        edges.append((f"e{len(edges)}", a, b, rng.choice(LENGTHS)))
    ref = {v: rng.randint(0, 2) for v in names}
    if sum(ref.values()) == 0:
        ref[names[0]] = 1
    return MetricGraph(names, edges, ref, sum(ref.values()))


def random_point(g: MetricGraph, rng: random.Random, vertex_bias: float = 0.4):
    if rng.random() < vertex_bias or not g.edges:
        return Vertex(rng.choice(g.vertices))
    e = rng.choice(g.edges)
    den = rng.choice([2, 3, 4, 5])
    return g.point(e.id, e.length * rng.randint(1, den - 1) / den)


def random_masses(rng: random.Random, k: int) -> list:
    w = [rng.randint(1, 5) for _ in range(k)]
    s = sum(w)
    return [Fraction(x, s) for x in w]


def random_graph_measure(g: MetricGraph, rng: random.Random, max_atoms: int = 4) -> AtomicMeasure:
    k = rng.randint(1, max_atoms)
    pts = {random_point(g, rng) for _ in range(k)}
    pts = sorted(pts, key=lambda p: p.sort_key())
    return AtomicMeasure(zip(pts, random_masses(rng, len(pts))), probability=True)


class GraphSampler:
    """Psh metrics as maxima of shifted convex combinations of Green potentials.

    Each potential solves ``ma(G_x) = delta_x`` and is psh, so every convex
    combination is psh and so is a finite max of shifted combinations.
    """

    def __init__(self, engine: GraphEngine, rng: random.Random, candidates=None):
        self.engine = engine
        self.rng = rng
        g = engine.graph
        if candidates is None:
            candidates = [Vertex(v) for v in g.vertices]
            candidates += [EdgePoint(e.id, e.length / 2) for e in g.edges]
        self.candidates = list(candidates)
        self._green: dict = {}

    def green(self, x) -> PLMetric:
        if x not in self._green:
            self._green[x] = solve(AtomicMeasure({x: 1}), self.engine.graph) + self.engine.reference
        return self._green[x]

    def branch(self) -> PLMetric:
        rng = self.rng
        k = rng.randint(1, min(3, len(self.candidates)))
        pts = rng.sample(self.candidates, k)
        ws = random_masses(rng, k)
        acc = self.green(pts[0]) * ws[0]
        for p, w in zip(pts[1:], ws[1:]):
            acc = acc + self.green(p) * w
        return acc + rng.choice(CONSTS)

    def metric(self, max_branches: int = 5) -> PLMetric:
        return maximum(*[self.branch() for _ in range(self.rng.randint(1, max_branches))])

    def metrics(self, count: int) -> list:
        return [self.metric() for _ in range(count)]


def _rational_in(lo, hi, rng, dens=(1, 2, 3, 4)):
    den = rng.choice(dens)
    a = -((-lo * den) // 1)
    b = (hi * den) // 1
    return Fraction(rng.randint(int(a), int(b)), den)


class ToricSampler:
    """Random tropical metrics: vertex slopes plus a few extra rational slopes in ``P``."""

    def __init__(self, P: LatticePolytope, rng: random.Random, max_extra: int = 3):
        self.P = P
        self.rng = rng
        self.max_extra = max_extra

    def slope(self):
        P, rng = self.P, self.rng
        lo = [min(v[i] for v in P.vertices) for i in range(P.n)]
        hi = [max(v[i] for v in P.vertices) for i in range(P.n)]
        while True:
            a = tuple(_rational_in(lo[i], hi[i], rng) for i in range(P.n))
            if P.contains(a):
                return a

    def metric(self) -> TropicalMetric:
        rng = self.rng
        pieces = [(v, rng.choice(CONSTS)) for v in self.P.vertices]
        for _ in range(rng.randint(0, self.max_extra)):
            pieces.append((self.slope(), rng.choice(CONSTS)))
        return TropicalMetric(self.P, pieces)

    def metrics(self, count: int) -> list:
        return [self.metric() for _ in range(count)]


def random_toric_measure(rng: random.Random, n: int, max_atoms: int = 8, box: int = 3) -> AtomicMeasure:
    k = rng.randint(1, max_atoms)
    pts = set()
    while len(pts) < k:
        pts.add(tuple(Fraction(rng.randint(-box * 2, box * 2), 2) for _ in range(n)))
    pts = sorted(pts)
    return AtomicMeasure(zip(pts, random_masses(rng, len(pts))), probability=True)


def battery_samples(sampler, count: int, size: int) -> list:
    """``count`` tuples of ``size`` metrics plus a rational ``t``."""
    return [(sampler.metrics(size), sampler.rng.choice(T_VALUES)) for _ in range(count)]


class AlgebraSampler:
    """Psh model metrics: random coefficient vectors, shrunk until the measure is positive."""

    def __init__(self, engine, rng: random.Random, halvings: int = 12):
        from .algebra import ModelMetric
        self.engine = engine
        self.rng = rng
        self.halvings = halvings
        self._make = ModelMetric

    def metric(self):
        eng, rng = self.engine, self.rng
        k = eng.alg.k
        if eng.n == 1 and k > 1:
            # solve is exact and linear at n = 1: every probability target gives a psh metric
            idx = rng.sample(range(k), rng.randint(1, min(3, k)))
            mu = AtomicMeasure(zip([eng.alg.names[i] for i in idx], random_masses(rng, len(idx))))
            u = eng.solve(mu)
            if eng.alg.constant is not None:
                u = eng.shift(u, rng.choice(CONSTS))
            return u
        d = [rng.choice(CONSTS) for _ in range(k)]
        scale = Fraction(1)
        for _ in range(self.halvings):
            u = self._make([scale * x for x in d])
            if eng.is_psh(u):
                return u
            scale /= 2
        return eng.reference

    def metrics(self, count: int) -> list:
        return [self.metric() for _ in range(count)]


def sampler_for(engine, rng: random.Random):
    """The default psh sampler for an engine."""
    name = getattr(engine, "name", "")
    if name == "graph":
        return GraphSampler(engine, rng)
    if name == "toric":
        return ToricSampler(engine.P, rng)
    if name == "algebra":
        return AlgebraSampler(engine, rng)
    raise TypeError(f"no sampler for engine {name!r}")
