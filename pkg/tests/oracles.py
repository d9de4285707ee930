"""Independent reference computations used to pin engine results.

Everything here works on plain data (dicts, lists, Fractions) and shares no
code with the package beyond reading a metric's stored profile.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

ZERO = Fraction(0)


# -- graphs -------------------------------------------------------------------------

def plain_graph(g):
    """``(edges, rho, V)`` with edges as ``(id, tail, head, length)`` tuples."""
    edges = [(e.id, e.tail, e.head, Fraction(e.length)) for e in g.edges]
    rho = {v: Fraction(m) for v, m in g.reference}
    return edges, rho, Fraction(g.degree)


def plain_profiles(u):
    """``{edge id: [(offset, value), ...]}`` including both endpoints."""
    return {e.id: [(Fraction(o), Fraction(x)) for o, x in u.profile(e.id)] for e in u.host.edges}


def dirichlet(profiles) -> Fraction:
    """``sum over affine pieces of (rise)^2 / run``, i.e. ``-int u d(laplacian u)``."""
    total = ZERO
    for prof in profiles.values():
        for (o0, v0), (o1, v1) in zip(prof, prof[1:]):
            total += (v1 - v0) ** 2 / (o1 - o0)
    return total


def quadratic_energy(edges, rho, V, vertex_values, profiles) -> Fraction:
    """Energy of ``u`` against the zero metric at ``n = 1``.

    ``E(u) = (int u d rho + (1/2) int u d(laplacian u)) / V``, and
    integrating by parts turns the second term into minus half the
    Dirichlet energy.
    """
    lin = sum((rho.get(v, ZERO) * x for v, x in vertex_values.items()), ZERO)
    return (lin - dirichlet(profiles) / 2) / V


def quadratic_I(V, profiles) -> Fraction:
    return dirichlet(profiles) / V


def quadratic_J(V, profiles) -> Fraction:
    return dirichlet(profiles) / (2 * V)


def slope_sum_ma(edges, rho, V, profiles) -> dict:
    """Monge-Ampère masses keyed by ``("v", id)`` or ``("e", edge, offset)``.

    At a vertex: reference mass plus the sum of outgoing slopes. At an
    interior breakpoint: the increase of slope. Everything divided by ``V``.
    """
    out: dict = {}

    def add(k, m):
        out[k] = out.get(k, ZERO) + m

    for v, m in rho.items():
        add(("v", v), m)
    for eid, tail, head, _ in edges:
        prof = profiles[eid]
        slopes = [(v1 - v0) / (o1 - o0) for (o0, v0), (o1, v1) in zip(prof, prof[1:])]
        add(("v", tail), slopes[0])
        add(("v", head), -slopes[-1])
        for i in range(1, len(prof) - 1):
            add(("e", eid, prof[i][0]), slopes[i] - slopes[i - 1])
    return {k: m / V for k, m in out.items() if m != 0}


def lp_envelope(vertices, edges, rho, psi: dict) -> dict:
    """Largest ``u <= psi`` with nonnegative curvature at every grid vertex.

    The feasible set is a lattice closed under max, so maximizing the sum of
    values returns its greatest element. Solved in floating point.
    """
    idx = {v: i for i, v in enumerate(vertices)}
    k = len(vertices)
    A, b = [], []
    # curvature_v = rho_v + sum_{edges at v} (u_other - u_v)/len >= 0
    rows = [np.zeros(k) for _ in range(k)]
    for _, t, h, ln in edges:
        if t == h:
            continue
        w = 1.0 / float(ln)
        rows[idx[t]][idx[h]] += w
        rows[idx[t]][idx[t]] -= w
        rows[idx[h]][idx[t]] += w
        rows[idx[h]][idx[h]] -= w
    for v in vertices:
        A.append(-rows[idx[v]])
        b.append(float(rho.get(v, ZERO)))
    bounds = [(None, float(psi[v])) for v in vertices]
    res = linprog(-np.ones(k), A_ub=np.array(A), b_ub=np.array(b), bounds=bounds, method="highs")
    assert res.status == 0, res.message
    return {v: float(res.x[idx[v]]) for v in vertices}


# -- toric ---------------------------------------------------------------------------

def _val(pieces, w):
    return max(sum((a_i * w_i for a_i, w_i in zip(a, w)), ZERO) + lam for a, lam in pieces)


def slope_jump_ma(pieces, length) -> dict:
    """1-D max-plus function: masses at kinks from slope differences.

    Kink candidates are pairwise crossings; slopes are read off at midpoints
    between consecutive candidates and beyond the extremes.
    """
    pieces = [(Fraction(a[0]), Fraction(lam)) for a, lam in pieces]
    cand = set()
    for (a1, l1), (a2, l2) in itertools.combinations(pieces, 2):
        if a1 != a2:
            cand.add((l1 - l2) / (a2 - a1))
    pts = sorted(cand)
    if not pts:
        return {}
    probes = [pts[0] - 1] + [(x + y) / 2 for x, y in zip(pts, pts[1:])] + [pts[-1] + 1]

    def slope_at(w):
        best = max(a * w + lam for a, lam in pieces)
        return max(a for a, lam in pieces if a * w + lam == best)

    slopes = [slope_at(w) for w in probes]
    out = {}
    for i, x in enumerate(pts):
        jump = slopes[i + 1] - slopes[i]
        if jump:
            out[(x,)] = jump / Fraction(length)
    return out


def _hull(points):
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cr(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cr(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cr(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _shoelace(poly):
    s = ZERO
    for i in range(len(poly)):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % len(poly)]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2


def triple_area_ma(pieces, volume) -> dict:
    """2-D max-plus function: enumerate triple crossings, keep the maximal ones,
    and measure the hull of the active slopes."""
    pieces = [((Fraction(a[0]), Fraction(a[1])), Fraction(lam)) for a, lam in pieces]
    out = {}
    for (a, la), (b, lb), (c, lc) in itertools.combinations(pieces, 3):
        # (a - b).w = lb - la ; (a - c).w = lc - la
        m11, m12, r1 = a[0] - b[0], a[1] - b[1], lb - la
        m21, m22, r2 = a[0] - c[0], a[1] - c[1], lc - la
        det = m11 * m22 - m12 * m21
        if det == 0:
            continue
        w = ((r1 * m22 - m12 * r2) / det, (m11 * r2 - r1 * m21) / det)
        if w in out:
            continue
        top = _val(pieces, w)
        if a[0] * w[0] + a[1] * w[1] + la != top:
            continue
        active = [p for p, lam in pieces if p[0] * w[0] + p[1] * w[1] + lam == top]
        area = _shoelace(_hull(active))
        if area:
            out[w] = area / Fraction(volume)
    return out


def legendre_envelope_1d(breaks, psi, w) -> Fraction:
    """Largest convex function with slopes in ``[0, 1]`` below a PL ``psi``.

    ``breaks`` lists the breakpoints of ``psi``; the envelope at ``w`` is the
    max over candidate slopes ``a`` of ``a w - psi*(a)`` with ``psi*``
    evaluated on the breakpoints (valid because ``psi``'s outer slopes cover
    ``[0, 1]``).
    """
    pts = [(Fraction(x), Fraction(psi(Fraction(x)))) for x in breaks]
    slopes = {Fraction(0), Fraction(1)}
    for (x0, y0), (x1, y1) in itertools.combinations(pts, 2):
        if x0 != x1:
            s = (y1 - y0) / (x1 - x0)
            if 0 <= s <= 1:
                slopes.add(s)

    def conj(a):
        return max(a * x - y for x, y in pts)

    return max(a * Fraction(w) - conj(a) for a in slopes)
