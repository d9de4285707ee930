"""Exact rational linear algebra."""
from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Mapping

from .errors import DomainError

ZERO = Fraction(0)


def solve_sparse(rows: Mapping[Hashable, Mapping[Hashable, Fraction]],
                 rhs: Mapping[Hashable, Fraction]) -> dict:
    """Solve a square sparse system exactly.

    ``rows[i][j]`` is the coefficient of unknown ``j`` in equation ``i``;
    equations and unknowns share one index set. The system is assumed to
    admit diagonal pivots (true for nonsingular M-matrices and SPD systems),
    and pivots are chosen greedily by smallest fill so that tree-like graph
    Laplacians eliminate in near-linear time.
    """
    work = {i: {j: Fraction(v) for j, v in r.items() if v != 0} for i, r in rows.items()}
    b = {i: Fraction(rhs.get(i, 0)) for i in work}
    # column -> rows touching it, kept in sync during elimination
    cols: dict = {}
    for i, r in work.items():
        for j in r:
            cols.setdefault(j, set()).add(i)
    order = []
    remaining = set(work)
    while remaining:
        p = min(remaining, key=lambda i: (len(work[i]), len(cols.get(i, ())), str(i)))
        remaining.discard(p)
        prow = work[p]
        piv = prow.get(p, ZERO)
        if piv == 0:
            raise DomainError("singular system (zero pivot)")
        for i in list(cols.get(p, ())):
            if i == p or i not in remaining:
                continue
            row = work[i]
            f = row[p] / piv
            for j, v in prow.items():
                nv = row.get(j, ZERO) - f * v
                if nv == 0:
                    if j in row:
                        del row[j]
                        cols[j].discard(i)
                else:
                    if j not in row:
                        cols.setdefault(j, set()).add(i)
                    row[j] = nv
            b[i] -= f * b[p]
        order.append(p)
    x: dict = {}
    for p in reversed(order):
        row = work[p]
        s = b[p]
        for j, v in row.items():
            if j != p:
                s -= v * x[j]
        x[p] = s / row[p]
    return x


def solve_dense(A, b) -> list:
    """Gaussian elimination with partial (nonzero) pivoting over Fractions."""
    n = len(A)
    M = [[Fraction(v) for v in row] + [Fraction(bi)] for row, bi in zip(A, b)]
    for c in range(n):
        p = next((r for r in range(c, n) if M[r][c] != 0), None)
        if p is None:
            raise DomainError("singular system")
        M[c], M[p] = M[p], M[c]
        inv = 1 / M[c][c]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c] * inv
                M[r] = [a - f * bb for a, bb in zip(M[r], M[c])]
    return [M[i][n] / M[i][i] for i in range(n)]


def lagrange_eval(xs, ys, x) -> Fraction:
    """Evaluate the interpolating polynomial through ``(xs, ys)`` at ``x``."""
    x = Fraction(x)
    total = ZERO
    for i, (xi, yi) in enumerate(zip(xs, ys)):
        term = Fraction(yi)
        for j, xj in enumerate(xs):
            if j != i:
                term *= (x - xj) / (Fraction(xi) - xj)
        total += term
    return total
