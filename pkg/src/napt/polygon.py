"""Exact planar geometry on Fraction coordinates."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Point = tuple


def cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Sequence[Point]) -> list:
    """Strict convex hull (no collinear points), counter-clockwise.

    Degenerate inputs return the one or two extreme points.
    """
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return hull


def area(poly: Sequence[Point]) -> Fraction:
    """Unsigned area of a simple polygon given in order."""
    n = len(poly)
    if n < 3:
        return Fraction(0)
    s = Fraction(0)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        s += x1 * y2 - x2 * y1
    return abs(s) / 2


def centroid(poly: Sequence[Point]):
    """Area centroid of a counter-clockwise polygon with positive area."""
    n = len(poly)
    a2 = Fraction(0)
    cx = Fraction(0)
    cy = Fraction(0)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        c = x1 * y2 - x2 * y1
        a2 += c
        cx += (x1 + x2) * c
        cy += (y1 + y2) * c
    return (cx / (3 * a2), cy / (3 * a2))


def clip(poly: Sequence[Point], a, c) -> list:
    """Intersect a convex polygon with the half-plane ``a . x >= c``."""
    out: list = []
    n = len(poly)
    if n == 0:
        return out
    vals = [a[0] * p[0] + a[1] * p[1] - c for p in poly]
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        vp, vq = vals[i], vals[(i + 1) % n]
        if vp >= 0:
            out.append(p)
        if (vp > 0 > vq) or (vp < 0 < vq):
            t = vp / (vp - vq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    # drop repeated vertices produced by touching lines
    dedup: list = []
    for p in out:
        if not dedup or dedup[-1] != p:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def is_convex_position(points: Sequence[Point]) -> bool:
    return len(convex_hull(points)) == len(set(points))


def point_in_polygon(p, poly) -> bool:
    """Closed containment test for a counter-clockwise convex polygon."""
    n = len(poly)
    return all(cross(poly[i], poly[(i + 1) % n], p) >= 0 for i in range(n))


def segment_on_line(poly, a, c):
    """Vertices of ``poly`` lying exactly on the line ``a . x = c``."""
    return [p for p in poly if a[0] * p[0] + a[1] * p[1] == c]


def upper_hull_1d(points):
    """Upper concave hull of ``(x, y)`` pairs, strictly concave, sorted by x.

    For duplicate x only the largest y is kept.
    """
    best: dict = {}
    for x, y in points:
        if x not in best or y > best[x]:
            best[x] = y
    pts = sorted(best.items())
    hull: list = []
    for p in pts:
        while len(hull) >= 2 and cross(hull[-2], hull[-1], p) >= 0:
            hull.pop()
        hull.append(p)
    return hull
