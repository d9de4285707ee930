"""Deterministic SVG snapshots of graph and toric objects."""
from __future__ import annotations

import math
from fractions import Fraction
from xml.sax.saxutils import escape

import numpy as np

from . import polygon as pg
from .complex import EdgePoint, MetricGraph, Vertex
from .graph import PLMetric, is_psh, ma
from .measure import AtomicMeasure
from .toric import TropicalMetric, point_label, t_ma

PALETTE = ["#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3",
           "#fdb462", "#b3de69", "#fccde5", "#d9d9d9", "#bc80bd"]
SIZE = 480
MARGIN = 40
DISC_AREA = 1600.0  # px^2 for unit mass


def _f(x) -> str:
    s = f"{float(x):.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class _Svg:
    def __init__(self, width=SIZE, height=SIZE):
        self.w, self.h = width, height
        self.items: list = []

    def add(self, s: str):
        self.items.append(s)

    def line(self, a, b, stroke="#444", width=1.5):
        self.add(f'<line x1="{_f(a[0])}" y1="{_f(a[1])}" x2="{_f(b[0])}" y2="{_f(b[1])}" '
                 f'stroke="{stroke}" stroke-width="{_f(width)}"/>')

    def polyline(self, pts, stroke="#d62728", width=2):
        p = " ".join(f"{_f(x)},{_f(y)}" for x, y in pts)
        self.add(f'<polyline points="{p}" fill="none" stroke="{stroke}" stroke-width="{_f(width)}"/>')

    def polygon(self, pts, fill, stroke="#333"):
        p = " ".join(f"{_f(x)},{_f(y)}" for x, y in pts)
        self.add(f'<polygon points="{p}" fill="{fill}" stroke="{stroke}" stroke-width="1"/>')

    def circle(self, c, r, fill="#1f77b4", opacity=0.6, cls=""):
        extra = f' class="{cls}"' if cls else ""
        self.add(f'<circle{extra} cx="{_f(c[0])}" cy="{_f(c[1])}" r="{_f(r)}" fill="{fill}" '
                 f'fill-opacity="{_f(opacity)}" stroke="#000" stroke-width="0.5"/>')

    def text(self, c, s, size=11):
        self.add(f'<text x="{_f(c[0])}" y="{_f(c[1])}" font-family="monospace" '
                 f'font-size="{size}">{escape(s)}</text>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" height="{self.h}" '
                f'viewBox="0 0 {self.w} {self.h}">')
        body = "\n".join(["<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>"] + self.items)
        return head + "\n" + body + "\n</svg>\n"


def _disc_radius(mass) -> float:
    return math.sqrt(abs(float(mass)) * DISC_AREA / math.pi)


# -- graphs -----------------------------------------------------------------------

def _distances(g: MetricGraph) -> np.ndarray:
    idx = {v: i for i, v in enumerate(g.vertices)}
    k = len(idx)
    d = np.full((k, k), np.inf)
    np.fill_diagonal(d, 0.0)
    for e in g.edges:
        a, b = idx[e.tail], idx[e.head]
        if a != b:
            ln = float(e.length)
            d[a, b] = d[b, a] = min(d[a, b], ln)
    for m in range(k):
        d = np.minimum(d, d[:, [m]] + d[[m], :])
    return d


def graph_layout(g: MetricGraph) -> dict:
    """Classical MDS on path distances; signs fixed so the layout is reproducible."""
    k = len(g.vertices)
    if k == 1:
        return {g.vertices[0]: (0.0, 0.0)}
    d = _distances(g)
    J = np.eye(k) - np.ones((k, k)) / k
    B = -0.5 * J @ (d ** 2) @ J
    vals, vecs = np.linalg.eigh(B)
    order = np.argsort(-vals, kind="stable")[:2]
    coords = []
    for j in order:
        v = vecs[:, j]
        nz = np.flatnonzero(np.abs(v) > 1e-9)
        if nz.size and v[nz[0]] < 0:
            v = -v
        coords.append(v * math.sqrt(max(vals[j], 0.0)))
    while len(coords) < 2:
        coords.append(np.zeros(k))
    return {v: (float(coords[0][i]), float(coords[1][i])) for i, v in enumerate(g.vertices)}


class _Frame:
    """Affine map from model coordinates into the drawing box (y pointing up)."""

    def __init__(self, pts, width=SIZE, height=SIZE, margin=MARGIN, x0=0.0):
        xs = [p[0] for p in pts] or [0.0]
        ys = [p[1] for p in pts] or [0.0]
        self.cx, self.cy = (min(xs) + max(xs)) / 2, (min(ys) + max(ys)) / 2
        span = max(max(xs) - min(xs), max(ys) - min(ys), 1e-9)
        self.s = (min(width, height) - 2 * margin) / span
        self.ox, self.oy = x0 + width / 2, height / 2

    def __call__(self, p):
        return (self.ox + (p[0] - self.cx) * self.s, self.oy - (p[1] - self.cy) * self.s)


def _edge_pos(g, layout, p):
    if isinstance(p, Vertex):
        return layout[p.id]
    e = g.edge(p.edge)
    t = float(p.offset / e.length)
    a, b = layout[e.tail], layout[e.head]
    if e.tail == e.head:
        ang = 2 * math.pi * t
        r = _loop_radius(g, e)
        return (a[0] + r * (1 - math.cos(ang)), a[1] + r * math.sin(ang))
    return (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))


def _loop_radius(g, e):
    return float(e.length) / (2 * math.pi)


def _draw_graph(svg, g, layout, fr):
    for e in g.edges:
        if e.tail == e.head:
            pts = [fr(_edge_pos(g, layout, EdgePoint(e.id, e.length * i / 32))) for i in range(1, 32)]
            a = fr(layout[e.tail])
            svg.polyline([a] + pts + [a], stroke="#444", width=1.5)
        else:
            svg.line(fr(layout[e.tail]), fr(layout[e.head]))
    for v in g.vertices:
        c = fr(layout[v])
        svg.circle(c, 3, fill="#000", opacity=1)
        svg.text((c[0] + 5, c[1] - 5), v)


def _graph_points(g, layout):
    pts = list(layout.values())
    for e in g.edges:
        if e.tail == e.head:
            r = _loop_radius(g, e)
            a = layout[e.tail]
            pts += [(a[0] + 2 * r, a[1] + r), (a[0], a[1] - r)]
    return pts


def render_graph_measure(g: MetricGraph, mu: AtomicMeasure, title: str = "") -> str:
    layout = graph_layout(g)
    fr = _Frame(_graph_points(g, layout))
    svg = _Svg()
    _draw_graph(svg, g, layout, fr)
    for p, m in mu.items():
        c = fr(_edge_pos(g, layout, p))
        svg.circle(c, _disc_radius(m), fill="#1f77b4" if m > 0 else "#d62728", cls="atom")
        svg.text((c[0] + 6, c[1] + 14), f"{p.label}: {m.numerator}/{m.denominator}")
    if title:
        svg.text((8, 16), title, 13)
    return svg.render()


def render_graph_metric(u: PLMetric, title: str = "") -> str:
    """Graph plus, on every edge, the profile of ``u`` drawn along the edge normal."""
    g = u.host
    layout = graph_layout(g)
    pts = _graph_points(g, layout)
    fr = _Frame(pts)
    svg = _Svg()
    _draw_graph(svg, g, layout, fr)
    amp = max((abs(float(x)) for _, x in _all_samples(u)), default=0.0)
    span = max(max(p[0] for p in pts) - min(p[0] for p in pts),
               max(p[1] for p in pts) - min(p[1] for p in pts), 1.0)
    h = 0.15 * span / amp if amp > 0 else 0.0
    for e in g.edges:
        prof = u.profile(e.id)
        line = []
        for off, val in prof:
            base = _edge_pos(g, layout, g.point(e.id, off)) if 0 < off < e.length else \
                layout[e.tail if off == 0 else e.head]
            nx, ny = _normal(g, layout, e, off)
            line.append(fr((base[0] + nx * h * float(val), base[1] + ny * h * float(val))))
        svg.polyline(line)
    for p, m in ma(u).items() if is_psh(u)[0] else []:
        svg.circle(fr(_edge_pos(g, layout, p)), _disc_radius(m) / 3, fill="#2ca02c", cls="atom")
    if title:
        svg.text((8, 16), title, 13)
    return svg.render()


def _all_samples(u):
    for e in u.host.edges:
        yield from u.profile(e.id)


def _normal(g, layout, e, off):
    a, b = layout[e.tail], layout[e.head]
    if e.tail == e.head:
        ang = 2 * math.pi * float(off / e.length)
        return (-math.cos(ang), math.sin(ang))
    dx, dy = b[0] - a[0], b[1] - a[1]
    n = math.hypot(dx, dy) or 1.0
    return (-dy / n, dx / n)


# -- toric ------------------------------------------------------------------------

def _box_for(points, pad=1.0):
    xs = [float(p[0]) for p in points] or [0.0]
    ys = [float(p[1]) for p in points] if points and len(points[0]) > 1 else [0.0]
    return (min(xs) - pad, max(xs) + pad, min(ys) - pad, max(ys) + pad)


def render_toric_measure(mu: AtomicMeasure, n: int, title: str = "") -> str:
    pts = [tuple(p) + ((0,) if n == 1 else ()) for p in mu]
    x0, x1, y0, y1 = _box_for(pts)
    fr = _Frame([(x0, y0), (x1, y1)])
    svg = _Svg()
    if n == 1:
        svg.line(fr((x0, 0)), fr((x1, 0)), stroke="#999")
    for p, m in mu.items():
        q = tuple(p) + ((0,) if n == 1 else ())
        c = fr((float(q[0]), float(q[1])))
        svg.circle(c, _disc_radius(m), cls="atom")
        svg.text((c[0] + 6, c[1] + 14), f"{point_label(p)}: {m.numerator}/{m.denominator}")
    if title:
        svg.text((8, 16), title, 13)
    return svg.render()


def render_toric_metric(u: TropicalMetric, title: str = "") -> str:
    """Left: linearity domains and MA discs in ``w``-space. Right: dual cells in ``P``."""
    mu = t_ma(u)
    svg = _Svg(2 * SIZE, SIZE)
    if u.n == 1:
        pts = [(float(p[0]), 0.0) for p in mu]
        x0, x1, _, _ = _box_for(pts)
        fr = _Frame([(x0, -1), (x1, 1)])
        svg.line(fr((x0, 0)), fr((x1, 0)), stroke="#999")
        for p, m in mu.items():
            c = fr((float(p[0]), 0.0))
            svg.circle(c, _disc_radius(m), cls="atom")
            svg.text((c[0] + 6, c[1] + 14), f"{point_label(p)}: {m.numerator}/{m.denominator}")
        lo, hi = u.P.vertices[0][0], u.P.vertices[-1][0]
        fr2 = _Frame([(float(lo), -1), (float(hi), 1)], x0=SIZE)
        for i, k in enumerate(u.kinks()):
            a, b = k.cell[0][0], k.cell[-1][0]
            svg.line(fr2((float(a), 0)), fr2((float(b), 0)), stroke=PALETTE[i % len(PALETTE)], width=8)
    else:
        pts = [tuple(float(c) for c in p) for p in mu]
        x0, x1, y0, y1 = _box_for(pts)
        fr = _Frame([(x0, y0), (x1, y1)])
        box = [(Fraction(x0), Fraction(y0)), (Fraction(x1), Fraction(y0)),
               (Fraction(x1), Fraction(y1)), (Fraction(x0), Fraction(y1))]
        for i, (a, lam) in enumerate(u.pieces):
            region = box
            for b, mu_b in u.pieces:
                if b == a:
                    continue
                # lam + a.w >= mu_b + b.w
                region = pg.clip(region, (a[0] - b[0], a[1] - b[1]), mu_b - lam)
            if len(region) >= 3:
                svg.polygon([fr((float(x), float(y))) for x, y in region], PALETTE[i % len(PALETTE)])
        for p, m in mu.items():
            c = fr(tuple(float(x) for x in p))
            svg.circle(c, _disc_radius(m), cls="atom")
            svg.text((c[0] + 6, c[1] + 14), f"{point_label(p)}: {m.numerator}/{m.denominator}")
        fr2 = _Frame([tuple(float(c) for c in v) for v in u.P.vertices], x0=SIZE)
        for i, k in enumerate(u.kinks()):
            svg.polygon([fr2((float(x), float(y))) for x, y in k.cell], PALETTE[i % len(PALETTE)])
    if title:
        svg.text((8, 16), title, 13)
    return svg.render()


def render(obj, engine=None, title: str = "") -> str:
    """Dispatch on the object type; measures need the engine for context."""
    if isinstance(obj, PLMetric):
        return render_graph_metric(obj, title)
    if isinstance(obj, TropicalMetric):
        return render_toric_metric(obj, title)
    if isinstance(obj, AtomicMeasure) and engine is not None:
        if getattr(engine, "name", "") == "graph":
            return render_graph_measure(engine.graph, obj, title)
        if getattr(engine, "name", "") == "toric":
            return render_toric_measure(obj, engine.n, title)
    raise TypeError(f"cannot render {type(obj).__name__}")
