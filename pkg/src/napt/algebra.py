"""Monge-Ampère calculus from user-supplied intersection tables."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .complex import EdgePoint, MetricGraph, Vertex
from .errors import DomainError, InvariantError
from .graph import PLMetric, refines, subdivide
from .measure import AtomicMeasure

ZERO = Fraction(0)


def _table(x, n, size):
    arr = np.empty((size,) * n, dtype=object)
    data = np.array(x, dtype=object)
    if data.shape != (size,) * n:
        raise DomainError(f"table must have shape {(size,) * n}, got {data.shape}")
    for idx in itertools.product(range(size), repeat=n):
        arr[idx] = Fraction(data[idx])
    return arr


class RestrictionAlgebra:
    """Components ``x_1..x_k`` with multiplicities and symmetric ``n``-linear tables.

    Basis index 0 is the reference bundle, index ``i`` is divisor ``D_i``.
    ``values[i][j]`` is the value of ``D_i`` at ``x_j`` (default
    ``delta_ij / b_j``).
    """

    def __init__(self, n: int, degree, names: Sequence[str], multiplicities: Sequence,
                 tables: Sequence, values=None, d_ref=None, constant=None):
        if n < 1:
            raise DomainError("dimension must be at least 1")
        self.n = n
        self.V = Fraction(degree)
        self.names = [str(x) for x in names]
        k = len(self.names)
        if len(set(self.names)) != k:
            raise DomainError("component names must be distinct")
        self.b = [Fraction(x) for x in multiplicities]
        if len(self.b) != k or any(x <= 0 for x in self.b):
            raise DomainError("multiplicities must be positive, one per component")
        if len(tables) != k:
            raise DomainError("one table per component")
        self.tables = [_table(t, n, k + 1) for t in tables]
        for j, t in enumerate(self.tables):
            for idx in itertools.product(range(k + 1), repeat=n):
                for perm in itertools.permutations(idx):
                    if t[perm] != t[idx]:
                        raise InvariantError(f"table of component {self.names[j]} is not symmetric at {idx}")
        if values is None:
            self.W = [[(1 / self.b[j]) if i == j else ZERO for j in range(k)] for i in range(k)]
            self.default_values = True
        else:
            self.W = [[Fraction(x) for x in row] for row in values]
            if len(self.W) != k or any(len(r) != k for r in self.W):
                raise DomainError("value table must be k x k")
            self.default_values = False
        self.d_ref_value = None if d_ref is None else Fraction(d_ref)
        if constant is not None:
            self.constant = tuple(Fraction(x) for x in constant)
        elif self.default_values:
            self.constant = tuple(self.b)
        else:
            self.constant = None

    @property
    def k(self) -> int:
        return len(self.names)

    def points(self) -> list:
        return list(self.names)

    def vector(self, d) -> list:
        d = [Fraction(x) for x in d]
        if len(d) != self.k:
            raise DomainError(f"coefficient vector must have length {self.k}")
        return [Fraction(1)] + d

    def value(self, d, j) -> Fraction:
        return sum((Fraction(d[i]) * self.W[i][j] for i in range(self.k)), ZERO)

    def contract(self, j, vectors) -> Fraction:
        t = self.tables[j]
        for v in vectors:
            t = np.tensordot(np.array(v, dtype=object), t, axes=(0, 0))
        return Fraction(t) if not isinstance(t, np.ndarray) else Fraction(t.item())


@dataclass(frozen=True)
class ModelMetric:
    """``phi_ref + sum d_i D_i``."""

    coeffs: tuple

    def __init__(self, coeffs):
        object.__setattr__(self, "coeffs", tuple(Fraction(x) for x in coeffs))

    def __add__(self, other):
        if isinstance(other, ModelMetric):
            return ModelMetric([a + b for a, b in zip(self.coeffs, other.coeffs)])
        return NotImplemented

    def __sub__(self, other):
        return ModelMetric([a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __mul__(self, c):
        c = Fraction(c)
        return ModelMetric([c * a for a in self.coeffs])

    __rmul__ = __mul__


@dataclass
class AlgebraDiagnostics:
    diagnostics: list
    Q: list
    eigenvalues: list
    symmetric: bool
    psd: bool

    @property
    def valid(self) -> bool:
        return not self.diagnostics

    @property
    def geometric(self) -> bool:
        return self.valid and self.symmetric and self.psd


def positivity_form(alg: RestrictionAlgebra) -> list:
    """``Q[a][b] = -sum_j W[a][j] R_j(D_b, L, ..., L) / V``."""
    k, n = alg.k, alg.n
    L = [Fraction(1)] + [ZERO] * k
    Q = []
    for a in range(k):
        row = []
        for b in range(k):
            Db = [ZERO] * (k + 1)
            Db[b + 1] = Fraction(1)
            s = ZERO
            for j in range(k):
                s += alg.W[a][j] * alg.contract(j, [Db] + [L] * (n - 1))
            row.append(-s / alg.V)
        Q.append(row)
    return Q


def a_validate(alg: RestrictionAlgebra, tol: float = 1e-10) -> AlgebraDiagnostics:
    """Check the mass law, nonnegative diagonals and positivity of the pairing."""
    diags = []
    L = [Fraction(1)] + [ZERO] * alg.k
    diag = [alg.contract(j, [L] * alg.n) for j in range(alg.k)]
    if sum(diag, ZERO) != alg.V:
        diags.append(f"mass law violated: sum of R_j(L,...,L) = {sum(diag, ZERO)} ≠ V = {alg.V}")
    for j, x in enumerate(diag):
        if x < 0:
            diags.append(f"negative self-intersection R_{alg.names[j]}(L,...,L) = {x}")
    if alg.V <= 0:
        diags.append("V must be positive")
    Q = positivity_form(alg)
    sym = all(Q[a][b] == Q[b][a] for a in range(alg.k) for b in range(alg.k))
    M = np.array([[float(x) for x in r] for r in Q])
    eig = sorted(np.linalg.eigvalsh((M + M.T) / 2).tolist()) if alg.k else []
    psd = all(e >= -tol for e in eig)
    return AlgebraDiagnostics(diags, Q, eig, sym, psd)


def a_ma_mixed(ms: Sequence[ModelMetric], alg: RestrictionAlgebra) -> AtomicMeasure:
    """Atom at ``x_j`` with mass ``R_j(L + m_1, ..., L + m_n) / V``."""
    if len(ms) != alg.n:
        raise DomainError(f"need exactly {alg.n} metrics")
    vecs = [alg.vector(m.coeffs) for m in ms]
    return AtomicMeasure({alg.names[j]: alg.contract(j, vecs) / alg.V for j in range(alg.k)})


def a_integrate(m: ModelMetric, mu: AtomicMeasure, alg: RestrictionAlgebra) -> Fraction:
    idx = {name: j for j, name in enumerate(alg.names)}
    total = ZERO
    for p, mass in mu.items():
        if p not in idx:
            raise DomainError(f"unknown component {p!r}")
        total += alg.value(m.coeffs, idx[p]) * mass
    return total


class AlgebraEngine:
    """Engine view of a restriction algebra (for the energy calculus)."""

    exact = True
    name = "algebra"

    def __init__(self, alg: RestrictionAlgebra):
        self.alg = alg
        self.n = alg.n
        self.reference = ModelMetric([ZERO] * alg.k)
        self.validation = a_validate(alg)
        self.certified = self.validation.geometric
        self.d_ref = alg.d_ref_value
        self._ma: dict = {}

    @property
    def V(self) -> Fraction:
        return self.alg.V

    def owns(self, phi) -> bool:
        return isinstance(phi, ModelMetric) and len(phi.coeffs) == self.alg.k

    def ma_mixed(self, metrics) -> AtomicMeasure:
        key = tuple(sorted(metrics, key=lambda m: m.coeffs))
        m = self._ma.get(key)
        if m is None:
            m = a_ma_mixed(list(key), self.alg)
            self._ma[key] = m
        return m

    def integrate(self, phi, psi, mu) -> Fraction:
        return a_integrate(phi - psi, mu, self.alg)

    def is_psh(self, phi) -> bool:
        return self.ma_mixed([phi] * self.n).is_positive()

    def combine(self, phi, psi, t):
        t = Fraction(t)
        return phi * t + psi * (1 - t)

    def shift(self, phi, c):
        if self.alg.constant is None:
            raise DomainError("no constant function is known for this value table")
        return phi + ModelMetric([Fraction(c) * x for x in self.alg.constant])

    def sup_diff(self, phi) -> Fraction:
        """Largest value of ``phi - ref`` over the component points."""
        return max(self.alg.value(phi.coeffs, j) for j in range(self.alg.k))

    def solve(self, mu):
        """Exact inverse of the Monge-Ampère map; linear, hence available for ``n = 1``."""
        if self.n != 1:
            raise DomainError("algebra solver is only available for n = 1")
        from .linalg import solve_dense
        alg = self.alg
        k = alg.k
        L = [Fraction(1)] + [ZERO] * k
        rows = []
        rhs = []
        for j in range(k):
            row = []
            for i in range(k):
                Di = [ZERO] * (k + 1)
                Di[i + 1] = Fraction(1)
                row.append(alg.contract(j, [Di]))
            rows.append(row)
            rhs.append(mu[alg.names[j]] * alg.V - alg.contract(j, [L]))
        # pin the first coefficient, drop the first equation (mass law)
        sol = solve_dense([r[1:] for r in rows[1:]], rhs[1:]) if k > 1 else []
        phi = ModelMetric([ZERO] + sol)
        return self.shift(phi, -self.sup_diff(phi))

    def solve_residual(self, mu, u) -> Fraction:
        diff = self.ma_mixed([u] * self.n) - mu
        return max((abs(m) for m in diff.values()), default=ZERO)

    def point_label(self, p) -> str:
        return str(p)

    def zero(self):
        return self.reference


def export_graph(g: MetricGraph, d_ref=None) -> RestrictionAlgebra:
    """Intersection data of a metric graph: one component per vertex.

    ``R_j(L) = reference(j)`` and ``R_j(D_i)`` is the Laplacian pairing:
    ``sum 1/length`` over edges joining ``i`` and ``j`` off the diagonal,
    minus the sum over non-loop edges at ``j`` on it.
    """
    names = list(g.vertices)
    k = len(names)
    pos = {v: i for i, v in enumerate(names)}
    tables = []
    lap = [[ZERO] * k for _ in range(k)]
    for e in g.edges:
        if e.tail == e.head:
            continue
        a, b = pos[e.tail], pos[e.head]
        w = 1 / e.length
        lap[a][b] += w
        lap[b][a] += w
        lap[a][a] -= w
        lap[b][b] -= w
    for j, v in enumerate(names):
        tables.append([g.reference_mass(v)] + lap[j])
    return RestrictionAlgebra(1, g.degree, names, [1] * k, tables, d_ref=d_ref)


def export_metric(u: PLMetric) -> ModelMetric:
    """Coefficient vector of a metric whose breakpoints are all vertices."""
    if u.breakpoint_points():
        raise DomainError("refine the graph so that all breakpoints are vertices before export")
    return ModelMetric([u.value_at_vertex(v) for v in u.host.vertices])


def export_measure(mu: AtomicMeasure) -> AtomicMeasure:
    out = {}
    for p, m in mu.items():
        if not isinstance(p, Vertex):
            raise DomainError("measure atoms must sit at vertices before export")
        out[p.id] = m
    return AtomicMeasure(out)
