"""Tropical (max-plus) metrics on lattice polytopes, dimensions one and two."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import polygon as pg
from .complex import fmt_q
from .errors import DomainError, InfeasibleError, PreconditionError
from .measure import AtomicMeasure

ZERO = Fraction(0)


def _vec(x) -> tuple:
    if isinstance(x, (int, Fraction, str)):
        return (Fraction(x),)
    return tuple(Fraction(c) for c in x)


def dot(a, b) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), ZERO)


def point_label(w) -> str:
    return "(" + ",".join(fmt_q(c) for c in w) + ")"


class LatticePolytope:
    """A full-dimensional convex polytope in dimension 1 or 2.

    Vertices are stored in canonical order (increasing for ``n = 1``,
    counter-clockwise from the lexicographically smallest for ``n = 2``).
    """

    def __init__(self, vertices: Iterable):
        pts = [_vec(v) for v in vertices]
        if not pts:
            raise DomainError("polytope needs vertices")
        n = len(pts[0])
        if n not in (1, 2) or any(len(p) != n for p in pts):
            raise DomainError("polytope dimension must be 1 or 2")
        self.n = n
        if n == 1:
            xs = sorted(set(pts))
            if len(xs) != 2:
                raise DomainError("a 1-dimensional polytope is an interval with two distinct endpoints")
            self.vertices = tuple(xs)
            self.volume = xs[1][0] - xs[0][0]
        else:
            if len(set(pts)) != len(pts):
                raise DomainError("duplicate polytope vertices")
            hull = pg.convex_hull(pts)
            if len(hull) < 3:
                raise DomainError("degenerate polytope (zero area)")
            if len(hull) != len(pts):
                raise DomainError("polytope vertices are not in convex position")
            self.vertices = tuple(hull)
            self.volume = pg.area(hull)
        self.V = math.factorial(n) * self.volume

    def __eq__(self, other):
        return isinstance(other, LatticePolytope) and self.vertices == other.vertices

    def __hash__(self):
        return hash(self.vertices)

    def __repr__(self):
        return f"LatticePolytope({[point_label(v) for v in self.vertices]})"

    def support(self, w) -> Fraction:
        """Support function ``h_P(w) = max over vertices of <v, w>``."""
        w = _vec(w)
        return max(dot(v, w) for v in self.vertices)

    def contains(self, a) -> bool:
        a = _vec(a)
        if self.n == 1:
            return self.vertices[0][0] <= a[0] <= self.vertices[1][0]
        return pg.point_in_polygon(a, self.vertices)

    def interior_point(self) -> tuple:
        k = len(self.vertices)
        return tuple(sum((v[i] for v in self.vertices), ZERO) / k for i in range(self.n))

    def edges(self) -> list:
        vs = self.vertices
        return [(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs))]

    def outward_normals(self) -> list:
        return [(q[1] - p[1], p[0] - q[0]) for p, q in self.edges()]


# -- kinks of max-plus expressions -------------------------------------------------

@dataclass(frozen=True)
class Kink:
    """A vertex ``w`` of a max-plus function with its subdifferential cell."""

    point: tuple
    cell: tuple  # slopes spanning the cell (interval endpoints or CCW polygon)
    size: Fraction  # length (n = 1) or area (n = 2) of the cell
    value: Fraction


def _dedupe(pieces) -> list:
    best: dict = {}
    for a, lam in pieces:
        a = _vec(a)
        lam = Fraction(lam)
        if a not in best or lam > best[a]:
            best[a] = lam
    return sorted(best.items())


def _kinks1(pieces) -> list:
    hull = pg.upper_hull_1d([(a[0], lam) for a, lam in pieces])
    out = []
    for (a0, l0), (a1, l1) in zip(hull, hull[1:]):
        w = -(l1 - l0) / (a1 - a0)
        out.append(Kink((w,), ((a0,), (a1,)), a1 - a0, a0 * w + l0))
    return out


def _exact_kink2(pieces, w):
    vals = [dot(a, w) + lam for a, lam in pieces]
    mx = max(vals)
    active = [a for (a, _), v in zip(pieces, vals) if v == mx]
    if len(active) < 3:
        return None
    hull = pg.convex_hull(active)
    if len(hull) < 3:
        return None
    return Kink(w, tuple(hull), pg.area(hull), mx)


def _triple_point(pieces, i, j, k):
    (ai, li), (aj, lj), (ak, lk) = pieces[i], pieces[j], pieces[k]
    b1 = (aj[0] - ai[0], aj[1] - ai[1])
    b2 = (ak[0] - ai[0], ak[1] - ai[1])
    det = b1[0] * b2[1] - b1[1] * b2[0]
    if det == 0:
        return None
    r1, r2 = li - lj, li - lk
    return ((r1 * b2[1] - r2 * b1[1]) / det, (b1[0] * r2 - b2[0] * r1) / det)


def _kinks2_exact(pieces) -> list:
    seen = {}
    for i, j, k in itertools.combinations(range(len(pieces)), 3):
        w = _triple_point(pieces, i, j, k)
        if w is None or w in seen:
            continue
        seen[w] = _exact_kink2(pieces, w)
    return sorted((kk for kk in seen.values() if kk is not None), key=lambda kk: kk.point)


def _kinks2(pieces) -> list:
    m = len(pieces)
    if m < 3:
        return []
    A = np.array([[float(a[0]), float(a[1])] for a, _ in pieces])
    L = np.array([float(lam) for _, lam in pieces])
    scale = 1.0 + np.abs(A).max() + np.abs(L).max()
    cand_w: set = set()
    combos = np.array(list(itertools.combinations(range(m), 3)), dtype=np.int64)
    for start in range(0, len(combos), 20000):
        c = combos[start:start + 20000]
        i, j, k = c[:, 0], c[:, 1], c[:, 2]
        b1 = A[j] - A[i]
        b2 = A[k] - A[i]
        det = b1[:, 0] * b2[:, 1] - b1[:, 1] * b2[:, 0]
        ok = np.abs(det) > 1e-13 * scale * scale
        r1 = L[i] - L[j]
        r2 = L[i] - L[k]
        with np.errstate(all="ignore"):
            w0 = (r1 * b2[:, 1] - r2 * b1[:, 1]) / det
            w1 = (b1[:, 0] * r2 - b2[:, 0] * r1) / det
            vals = np.outer(w0, A[:, 0]) + np.outer(w1, A[:, 1]) + L
            mx = vals.max(axis=1)
            own = A[i, 0] * w0 + A[i, 1] * w1 + L[i]
            tol = 1e-9 * (scale + np.abs(mx) + scale * (np.abs(w0) + np.abs(w1)))
            keep = ok & (own >= mx - tol)
        for t in np.nonzero(keep)[0]:
            cand_w.add((int(i[t]), int(j[t]), int(k[t])))
    found: dict = {}
    for i, j, k in sorted(cand_w):
        w = _triple_point(pieces, i, j, k)
        if w is None or w in found:
            continue
        found[w] = _exact_kink2(pieces, w)
    out = sorted((kk for kk in found.values() if kk is not None), key=lambda kk: kk.point)
    total = sum((kk.size for kk in out), ZERO)
    if total != pg.area(pg.convex_hull([a for a, _ in pieces])):
        out = _kinks2_exact(pieces)
    return out


def _kinks2_active(pieces) -> list:
    """Kinks via a growing active set of pieces.

    Starts from the pieces at hull vertices of the slope set and keeps adding
    any piece that beats the current maximum at a current kink. Once none
    does, the active maximum equals the full one: every omitted piece lies
    below it at each kink and its slope sits inside the active slope hull.
    """
    hull = set(pg.convex_hull([a for a, _ in pieces]))
    active = {i for i, (a, _) in enumerate(pieces) if a in hull}
    A = np.array([[float(a[0]), float(a[1])] for a, _ in pieces])
    L = np.array([float(lam) for _, lam in pieces])
    c = A.mean(axis=0)
    for probe in ((0.0, 0.0), tuple(c), (c[0] + 0.5, c[1]), (c[0], c[1] + 0.5)):
        active.add(int(np.argmax(A @ np.array(probe) + L)))
    while True:
        sub = [pieces[i] for i in sorted(active)]
        ks = _kinks2(sub)
        grew = False
        for kk in ks:
            vals = [dot(a, kk.point) + lam for a, lam in pieces]
            top = max(vals)
            if top > kk.value:
                active.update(i for i, v in enumerate(vals) if v == top)
                grew = True
        if not grew:
            return ks


def kinks_of(pieces, n: int) -> list:
    """Kinks of ``w -> max(<a, w> + lam)`` with their subdifferential cells.

    Works for any finite slope set; cell sizes add up to the volume of the
    convex hull of the slopes.
    """
    ps = _dedupe(pieces)
    if n == 1:
        return _kinks1(ps)
    return _kinks2_active(ps) if len(ps) > 12 else _kinks2(ps)


# -- tropical metrics ------------------------------------------------------------

class TropicalMetric:
    """``u(w) = max over pieces of <alpha, w> + lam`` with all slopes in ``P``.

    Every vertex of ``P`` must occur as a slope, which makes ``u - h_P``
    bounded. Equality and hashing use the canonical piece set: slopes that
    are vertices of some subdifferential cell, with ``lam = -u*(alpha)``.
    """

    def __init__(self, polytope: LatticePolytope, pieces: Iterable):
        self.P = polytope
        ps = _dedupe(pieces)
        for a, _ in ps:
            if len(a) != polytope.n:
                raise DomainError("slope dimension does not match the polytope")
            if not polytope.contains(a):
                raise DomainError(f"slope {point_label(a)} lies outside the polytope")
        slopes = {a for a, _ in ps}
        missing = [v for v in polytope.vertices if v not in slopes]
        if missing:
            raise DomainError("metric is unbounded relative to h_P: missing vertex slopes "
                              + ", ".join(point_label(v) for v in missing))
        self._raw = ps
        self._kinks = None
        self._canon = None
        self._hash = None

    @property
    def n(self) -> int:
        return self.P.n

    @property
    def raw_pieces(self) -> list:
        return list(self._raw)

    def kinks(self) -> list:
        if self._kinks is None:
            self._kinks = kinks_of(self._raw, self.n)
        return self._kinks

    @property
    def pieces(self) -> tuple:
        """Canonical pieces, sorted by slope."""
        if self._canon is None:
            best: dict = {}
            for kk in self.kinks():
                for a in kk.cell:
                    best[a] = kk.value - dot(a, kk.point)
            self._canon = tuple(sorted(best.items()))
        return self._canon

    def __call__(self, w) -> Fraction:
        return self.evaluate(w)

    def evaluate(self, w) -> Fraction:
        w = _vec(w)
        return max(dot(a, w) + lam for a, lam in self._raw)

    def __eq__(self, other):
        if not isinstance(other, TropicalMetric):
            return NotImplemented
        return self.P == other.P and self.pieces == other.pieces

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.P, self.pieces))
        return self._hash

    def __repr__(self):
        return f"TropicalMetric({format_metric(self)})"

    def shift(self, c) -> TropicalMetric:
        c = Fraction(c)
        return TropicalMetric(self.P, [(a, lam + c) for a, lam in self.pieces])

    def __add__(self, c):
        return self.shift(c)

    def __sub__(self, c):
        return self.shift(-Fraction(c))

    def max_lambda(self) -> Fraction:
        return max(lam for _, lam in self.pieces)


def support_metric(P: LatticePolytope) -> TropicalMetric:
    """The trivial metric ``h_P``."""
    return TropicalMetric(P, [(v, 0) for v in P.vertices])


def t_eval(u: TropicalMetric, w) -> Fraction:
    return u.evaluate(w)


def t_ma(u: TropicalMetric) -> AtomicMeasure:
    """Normalized subdifferential volumes at the kinks of ``u``."""
    vol = u.P.volume
    return AtomicMeasure({kk.point: kk.size / vol for kk in u.kinks()})


def _raw_ma(pieces, n) -> AtomicMeasure:
    return AtomicMeasure({kk.point: kk.size for kk in kinks_of(pieces, n)})


def t_ma_mixed(us: Sequence[TropicalMetric]) -> AtomicMeasure:
    """Mixed Monge-Ampère measure by polarization."""
    n = us[0].n
    if len(us) != n:
        raise DomainError(f"need exactly {n} metrics")
    P = us[0].P
    if any(u.P != P for u in us):
        raise DomainError("metrics live on different polytopes")
    if n == 1:
        return t_ma(us[0])
    u1, u2 = us
    if u1 == u2:
        return t_ma(u1)
    summed = [(tuple(x + y for x, y in zip(a, b)), la + lb)
              for a, la in u1.pieces for b, lb in u2.pieces]
    raw = _raw_ma(summed, 2) - _raw_ma(u1.pieces, 2) - _raw_ma(u2.pieces, 2)
    return raw / (2 * P.volume)


def t_subdifferential(u: TropicalMetric, w) -> list:
    """Exact subdifferential of ``u`` at ``w`` as a list of spanning slopes."""
    w = _vec(w)
    vals = [(dot(a, w) + lam, a) for a, lam in u.raw_pieces]
    mx = max(v for v, _ in vals)
    active = [a for v, a in vals if v == mx]
    if u.n == 1:
        lo, hi = min(active), max(active)
        return [lo] if lo == hi else [lo, hi]
    return pg.convex_hull(active)


def t_scale(u: TropicalMetric, t) -> TropicalMetric:
    """``u_t(w) = t u(w / t)``: each piece ``(alpha, lam)`` becomes ``(alpha, t lam)``."""
    t = Fraction(t)
    if t <= 0:
        raise DomainError("scaling parameter must be positive")
    return TropicalMetric(u.P, [(a, t * lam) for a, lam in u.pieces])


def scale_point(w, t) -> tuple:
    return tuple(Fraction(t) * c for c in w)


def t_combine(phi: TropicalMetric, psi: TropicalMetric, t) -> TropicalMetric:
    """``t phi + (1 - t) psi`` for rational ``t`` in ``[0, 1]``."""
    t = Fraction(t)
    if t == 1:
        return phi
    if t == 0:
        return psi
    pieces = [(tuple(t * x + (1 - t) * y for x, y in zip(a, b)), t * la + (1 - t) * lb)
              for a, la in phi.pieces for b, lb in psi.pieces]
    return TropicalMetric(phi.P, pieces)


def toric_energy(u: TropicalMetric, ref: TropicalMetric | None = None) -> Fraction:
    """``E(u) = -(1/|P|) * integral over P of u*``, i.e. minus the mean Legendre dual.

    Uses the dual cells of ``u``: on the cell at kink ``w`` the dual is
    ``alpha . w - u(w)``, integrated via the cell centroid.
    """
    P = u.P
    total = ZERO
    for kk in u.kinks():
        if u.n == 1:
            c = ((kk.cell[0][0] + kk.cell[1][0]) / 2,)
        else:
            c = pg.centroid(kk.cell)
        total += kk.size * (dot(c, kk.point) - kk.value)
    e = -total / P.volume
    if ref is not None:
        e -= toric_energy(ref)
    return e


def format_metric(u: TropicalMetric) -> str:
    """Human-readable max-plus expression, e.g. ``max(0, 1/2*w, w - 1/2)``."""
    names = ["w"] if u.n == 1 else ["w1", "w2"]
    terms = []
    for a, lam in u.pieces:
        parts = []
        for c, name in zip(a, names):
            if c == 0:
                continue
            if c == 1:
                s = name
            elif c == -1:
                s = "-" + name
            else:
                s = f"{fmt_q(c)}*{name}"
            if parts:
                parts.append(("- " + s[1:]) if s.startswith("-") else ("+ " + s))
            else:
                parts.append(s)
        if not parts:
            parts.append(fmt_q(lam))
        elif lam > 0:
            parts.append(f"+ {fmt_q(lam)}")
        elif lam < 0:
            parts.append(f"- {fmt_q(-lam)}")
        terms.append(" ".join(parts))
    return "max(" + ", ".join(terms) + ")"


# -- obstacles and envelopes ---------------------------------------------------------

class Obstacle:
    """Piecewise-affine function given as a max/min tree of affine leaves."""

    def evaluate(self, w) -> Fraction:
        raise NotImplementedError

    def recession(self, d) -> Fraction:
        raise NotImplementedError

    def leaves(self) -> list:
        raise NotImplementedError

    def __call__(self, w):
        return self.evaluate(_vec(w))

    def shift(self, c) -> Obstacle:
        raise NotImplementedError


@dataclass(frozen=True)
class Affine(Obstacle):
    slope: tuple
    const: Fraction

    def __init__(self, slope, const=0):
        object.__setattr__(self, "slope", _vec(slope))
        object.__setattr__(self, "const", Fraction(const))

    def evaluate(self, w):
        return dot(self.slope, w) + self.const

    def recession(self, d):
        return dot(self.slope, d)

    def leaves(self):
        return [self]

    def shift(self, c):
        return Affine(self.slope, self.const + Fraction(c))


@dataclass(frozen=True)
class MaxOf(Obstacle):
    children: tuple

    def __init__(self, children):
        object.__setattr__(self, "children", tuple(children))
        if not self.children:
            raise DomainError("empty max")

    def evaluate(self, w):
        return max(c.evaluate(w) for c in self.children)

    def recession(self, d):
        return max(c.recession(d) for c in self.children)

    def leaves(self):
        return [leaf for c in self.children for leaf in c.leaves()]

    def shift(self, c):
        return MaxOf([ch.shift(c) for ch in self.children])


@dataclass(frozen=True)
class MinOf(Obstacle):
    children: tuple

    def __init__(self, children):
        object.__setattr__(self, "children", tuple(children))
        if not self.children:
            raise DomainError("empty min")

    def evaluate(self, w):
        return min(c.evaluate(w) for c in self.children)

    def recession(self, d):
        return min(c.recession(d) for c in self.children)

    def leaves(self):
        return [leaf for c in self.children for leaf in c.leaves()]

    def shift(self, c):
        return MinOf([ch.shift(c) for ch in self.children])


def obstacle_from_metric(u: TropicalMetric) -> Obstacle:
    return MaxOf([Affine(a, lam) for a, lam in u.pieces])


def _check_bounded(psi: Obstacle, P: LatticePolytope) -> None:
    if P.n == 1:
        dirs = [(Fraction(1),), (Fraction(-1),)]
    else:
        dirs = {(Fraction(1), ZERO), (Fraction(-1), ZERO), (ZERO, Fraction(1)), (ZERO, Fraction(-1))}
        leaves = psi.leaves()
        for x, y in itertools.combinations(leaves, 2):
            d = (x.slope[0] - y.slope[0], x.slope[1] - y.slope[1])
            if d != (0, 0):
                dirs.add((-d[1], d[0]))
                dirs.add((d[1], -d[0]))
        for nrm in P.outward_normals():
            dirs.add(nrm)
        dirs = sorted(dirs)
    for d in dirs:
        if psi.recession(d) < P.support(d):
            raise DomainError("obstacle is unbounded below relative to h_P; no psh metric lies under it")


def _candidate_points(psi: Obstacle, n: int) -> list:
    leaves = list({(leaf.slope, leaf.const) for leaf in psi.leaves()})
    if n == 1:
        pts = {(ZERO,)}
        for (a, c), (b, d) in itertools.combinations(leaves, 2):
            if a != b:
                pts.add(((d - c) / (a[0] - b[0]),))
        return sorted(pts)
    lines = set()
    for (a, c), (b, d) in itertools.combinations(leaves, 2):
        nv = (a[0] - b[0], a[1] - b[1])
        if nv == (0, 0):
            continue
        rhs = d - c
        # normalize so that lines compare equal
        k = nv[0] if nv[0] != 0 else nv[1]
        lines.add(((nv[0] / k, nv[1] / k), rhs / k))
    lines = sorted(lines)
    pts = {(ZERO, ZERO)}
    for nv, r in lines:
        nn = nv[0] * nv[0] + nv[1] * nv[1]
        pts.add((nv[0] * r / nn, nv[1] * r / nn))
    for (n1, r1), (n2, r2) in itertools.combinations(lines, 2):
        det = n1[0] * n2[1] - n1[1] * n2[0]
        if det != 0:
            pts.add(((r1 * n2[1] - r2 * n1[1]) / det, (n1[0] * r2 - n2[0] * r1) / det))
    return sorted(pts)


def t_envelope(psi: Obstacle, P: LatticePolytope) -> TropicalMetric:
    """Largest convex function with slopes in ``P`` lying below ``psi``.

    Computed as a double Legendre transform. The conjugate
    ``psi*(alpha) = max_v <alpha, v> - psi(v)`` is exact over the vertices of
    the arrangement of tie lines of ``psi``; the envelope is then the max of
    ``<alpha, w> - psi*(alpha)`` over the vertices of ``psi*``'s linearity
    complex clipped to ``P``.
    """
    _check_bounded(psi, P)
    cands = _candidate_points(psi, P.n)
    conj = _dedupe([(v, -psi.evaluate(v)) for v in cands])

    def star(alpha):
        return max(dot(alpha, v) + lam for v, lam in conj)

    alphas = set(P.vertices)
    if P.n == 1:
        lo, hi = P.vertices[0][0], P.vertices[1][0]
        for kk in kinks_of(conj, 1):
            if lo < kk.point[0] < hi:
                alphas.add(kk.point)
    else:
        for kk in kinks_of(conj, 2):
            if P.contains(kk.point):
                alphas.add(kk.point)
        for p, q in P.edges():
            e = (q[0] - p[0], q[1] - p[1])
            line = [((dot(e, v),), dot(p, v) + lam) for v, lam in conj]
            for kk in kinks_of(line, 1):
                s = kk.point[0]
                if 0 < s < 1:
                    alphas.add((p[0] + s * e[0], p[1] + s * e[1]))
    return TropicalMetric(P, [(a, -star(a)) for a in sorted(alphas)])


# -- Calabi-Yau solver -----------------------------------------------------------------

@dataclass
class SolveResult:
    metric: TropicalMetric
    psi: list
    atoms: list
    F_history: list = field(default_factory=list)
    residual: Fraction = ZERO
    iterations: int = 0


def _check_target(mu: AtomicMeasure, n: int):
    if not mu.is_positive():
        raise PreconditionError("target measure has negative masses")
    if mu.total_mass() != 1:
        raise PreconditionError(f"target is not a probability measure (total {mu.total_mass()})")
    atoms = sorted(mu)
    for w in atoms:
        if not isinstance(w, tuple) or len(w) != n:
            raise DomainError(f"atom {w!r} has the wrong dimension")
    return atoms, [mu[w] for w in atoms]


def _solve1(mu: AtomicMeasure, P: LatticePolytope) -> SolveResult:
    atoms, masses = _check_target(mu, 1)
    lo = P.vertices[0][0]
    slopes = [lo]
    lams = [ZERO]
    acc = ZERO
    for w, m in zip(atoms, masses):
        acc += m
        s = lo + acc * P.volume
        lams.append(lams[-1] - (s - slopes[-1]) * w[0])
        slopes.append(s)
    top = max(lams)
    u = TropicalMetric(P, [((s,), lam - top) for s, lam in zip(slopes, lams)])
    psi = [u(w) for w in atoms]
    return SolveResult(u, psi, atoms, [], ZERO, 0)


class _Cells:
    """Exact Laguerre cells ``{alpha in P : <alpha, w_i> - psi_i is maximal}``."""

    def __init__(self, P, atoms, psi):
        self.P = P
        self.atoms = atoms
        self.psi = psi
        k = len(atoms)
        self.polys = []
        for i in range(k):
            poly = list(P.vertices)
            for j in range(k):
                if j == i or not poly:
                    continue
                a = (atoms[i][0] - atoms[j][0], atoms[i][1] - atoms[j][1])
                poly = pg.clip(poly, a, psi[i] - psi[j])
            self.polys.append(poly)
        self.areas = [pg.area(p) for p in self.polys]

    def masses(self):
        return [a / self.P.volume for a in self.areas]

    def dual_value(self, masses) -> Fraction:
        """Concave dual objective, exact."""
        total = ZERO
        for poly, ar, w, ps in zip(self.polys, self.areas, self.atoms, self.psi):
            if ar > 0:
                c = pg.centroid(poly)
                total += ar * (dot(c, w) - ps)
        f = -total / self.P.volume
        for m, w, ps in zip(masses, self.atoms, self.psi):
            f -= m * (ps - self.P.support(w))
        return f

    def hessian(self) -> np.ndarray:
        k = len(self.atoms)
        H = np.zeros((k, k))
        vol = float(self.P.volume)
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                a = (self.atoms[i][0] - self.atoms[j][0], self.atoms[i][1] - self.atoms[j][1])
                on = pg.segment_on_line(self.polys[i], a, self.psi[i] - self.psi[j])
                if len(on) < 2:
                    continue
                xs = [(float(p[0]), float(p[1])) for p in on]
                length = max(math.dist(p, q) for p in xs for q in xs)
                H[i, j] = length / (math.hypot(float(a[0]), float(a[1])) * vol)
        H = (H + H.T) / 2
        return np.diag(H.sum(axis=1)) - H


def _dyadic(x: float, bits: int = 50) -> Fraction:
    return Fraction(round(x * (1 << bits)), 1 << bits)


def default_init(P: LatticePolytope, atoms, center=None) -> list:
    """Initial potentials whose cells are Voronoi cells of shrunken atoms inside ``P``."""
    a = _vec(center) if center is not None else P.interior_point()
    k = len(atoms)
    wbar = tuple(sum((w[i] for w in atoms), ZERO) / k for i in range(2))
    K = Fraction(1)
    while True:
        sites = [(a[0] + (w[0] - wbar[0]) / K, a[1] + (w[1] - wbar[1]) / K) for w in atoms]
        inside = all(pg.point_in_polygon(s, P.vertices) and
                     all(pg.cross(p, q, s) > 0 for p, q in P.edges()) for s in sites)
        if inside:
            return [K * dot(s, s) / 2 for s in sites]
        K *= 2


def _exact_metric(P, cells: _Cells) -> TropicalMetric:
    alphas = set(P.vertices)
    for poly in cells.polys:
        alphas.update(poly)
    pieces = [(al, -max(dot(al, w) - ps for w, ps in zip(cells.atoms, cells.psi))) for al in alphas]
    return TropicalMetric(P, pieces)


def _finish(P, atoms, cells, hist, resid, it) -> SolveResult:
    u = _exact_metric(P, cells)
    top = u.max_lambda()
    u = u.shift(-top)
    return SolveResult(u, [p - top for p in cells.psi], atoms, hist, resid, it)


def _newton2(P, atoms, masses, psi, tol, max_iter) -> SolveResult:
    cells = _Cells(P, atoms, psi)
    G = cells.masses()
    if min(G) <= 0:
        raise InfeasibleError("initial potentials leave an empty cell", atoms[G.index(min(G))])
    F = cells.dual_value(masses)
    hist = [F]
    resid = max(abs(g - m) for g, m in zip(G, masses))
    eps0 = min(min(masses), min(G)) / 2
    it = 0
    ftol = Fraction(tol)
    while resid > ftol:
        if it >= max_iter:
            bad = max(range(len(atoms)), key=lambda i: abs(G[i] - masses[i]))
            raise InfeasibleError(f"solver did not converge in {max_iter} iterations", atoms[bad])
        it += 1
        Lm = cells.hessian()
        g = np.array([float(x - m) for x, m in zip(G, masses)])
        d = np.zeros(len(atoms))
        d[1:] = np.linalg.solve(Lm[1:, 1:], g[1:])
        theta = 1.0
        while True:
            new_psi = [p + _dyadic(theta * di) for p, di in zip(psi, d)]
            nc = _Cells(P, atoms, new_psi)
            nG = nc.masses()
            nres = max(abs(x - m) for x, m in zip(nG, masses))
            if min(nG) >= eps0 and nres <= (1 - Fraction(theta) / 2) * resid:
                nF = nc.dual_value(masses)
                if nF >= F:
                    break
            theta /= 2
            if theta < 2.0 ** -40:
                bad = max(range(len(atoms)), key=lambda i: abs(G[i] - masses[i]))
                raise InfeasibleError("damped Newton step failed to make progress", atoms[bad])
        psi, cells, G, resid, F = new_psi, nc, nG, nres, nF
        hist.append(F)
    return _finish(P, atoms, cells, hist, resid, it)


def _coordinate2(P, atoms, masses, psi, tol, max_iter) -> SolveResult:
    psi = list(psi)
    cells = _Cells(P, atoms, psi)
    hist = [cells.dual_value(masses)]
    ftol = Fraction(tol)
    span = max(abs(c) for w in atoms for c in w) + 1
    diam = max(abs(c) for v in P.vertices for c in v) + 1
    it = 0
    while True:
        G = cells.masses()
        resid = max(abs(g - m) for g, m in zip(G, masses))
        if resid <= ftol:
            break
        if it >= max_iter:
            bad = max(range(len(atoms)), key=lambda i: abs(G[i] - masses[i]))
            raise InfeasibleError(f"coordinate ascent did not converge in {max_iter} sweeps", atoms[bad])
        it += 1
        for i in range(len(atoms)):
            lo = psi[i] - 4 * span * diam
            hi = psi[i] + 4 * span * diam
            for _ in range(60):
                mid = _dyadic(float((lo + hi) / 2))
                trial = psi[:i] + [mid] + psi[i + 1:]
                gi = _Cells(P, atoms, trial).areas[i] / P.volume
                if gi > masses[i]:
                    lo = mid
                else:
                    hi = mid
            psi[i] = (lo + hi) / 2
            psi[i] = _dyadic(float(psi[i]))
        cells = _Cells(P, atoms, psi)
        hist.append(cells.dual_value(masses))
    G = cells.masses()
    resid = max(abs(g - m) for g, m in zip(G, masses))
    return _finish(P, atoms, cells, hist, resid, it)


def t_solve_detailed(mu: AtomicMeasure, P: LatticePolytope, tol: float = 1e-9,
                     method: str = "newton", init=None, max_iter: int = 100) -> SolveResult:
    """Solve ``t_ma(u) = mu``; returns the metric plus solver diagnostics.

    ``n = 1`` is exact. For ``n = 2`` a damped Newton ascent on the concave
    dual objective is used (``method="coordinate"`` selects bisection-based
    coordinate ascent). Cell areas and the objective are exact rationals at
    every iterate; only the Newton direction is computed in floating point.
    The output is normalized by ``max lam = 0``, i.e. ``sup(u - h_P) = 0``.
    """
    if P.n == 1:
        return _solve1(mu, P)
    atoms, masses = _check_target(mu, 2)
    if len(atoms) == 1:
        w = atoms[0]
        u = TropicalMetric(P, [(v, -dot(v, w)) for v in P.vertices])
        u = u.shift(-u.max_lambda())
        return SolveResult(u, [u(w)], atoms, [], ZERO, 0)
    if init is None:
        psi = default_init(P, atoms)
    elif callable(init):
        psi = [Fraction(x) for x in init(P, atoms)]
    else:
        psi = [Fraction(x) for x in init]
    if method == "newton":
        return _newton2(P, atoms, masses, psi, tol, max_iter)
    if method == "coordinate":
        return _coordinate2(P, atoms, masses, psi, tol, max_iter)
    raise DomainError(f"unknown solver method {method!r}")


def t_solve(mu: AtomicMeasure, P: LatticePolytope, tol: float = 1e-9, **kw) -> TropicalMetric:
    return t_solve_detailed(mu, P, tol, **kw).metric


# -- engine ---------------------------------------------------------------------------

class ToricEngine:
    """Monge-Ampère engine on tropical metrics with reference ``h_P``."""

    exact = True
    name = "toric"

    def __init__(self, P: LatticePolytope, tol: float = 1e-9):
        self.P = P
        self.n = P.n
        self.reference = support_metric(P)
        self.d_ref = ZERO
        self.tol = tol
        self._ma: dict = {}

    @property
    def V(self) -> Fraction:
        return self.P.V

    def owns(self, phi) -> bool:
        return isinstance(phi, TropicalMetric) and phi.P == self.P

    def ma_mixed(self, metrics) -> AtomicMeasure:
        key = tuple(sorted(metrics, key=lambda u: u.pieces))
        m = self._ma.get(key)
        if m is None:
            m = t_ma_mixed(list(key))
            self._ma[key] = m
        return m

    def ma(self, u) -> AtomicMeasure:
        return self.ma_mixed([u] * self.n)

    def integrate(self, phi, psi, mu) -> Fraction:
        return mu.integrate(lambda w: phi(w) - psi(w))

    def is_psh(self, phi) -> bool:
        return self.owns(phi)

    def combine(self, phi, psi, t) -> TropicalMetric:
        return t_combine(phi, psi, t)

    def shift(self, phi, c) -> TropicalMetric:
        return phi.shift(c)

    def sup_diff(self, phi) -> Fraction:
        return phi.max_lambda()

    def solve(self, mu) -> TropicalMetric:
        return t_solve(mu, self.P, self.tol)

    def solve_residual(self, mu, u) -> Fraction:
        diff = t_ma(u) - mu
        return max((abs(m) for m in diff.values()), default=ZERO)

    def point_label(self, w) -> str:
        return point_label(w)

    def zero(self):
        return self.reference
