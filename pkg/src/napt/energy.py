"""Energy functionals, explicit estimate constants, and the inequality battery.

Every function here works against a duck-typed engine exposing ``n``, ``V``,
``reference``, ``ma_mixed``, ``integrate``, ``combine``, ``shift``,
``sup_diff`` and optionally ``d_ref`` and ``solve``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import DomainError, ValidationRefusal

ZERO = Fraction(0)


def _check(engine, *metrics):
    for m in metrics:
        if not engine.owns(m):
            raise DomainError("metric does not belong to this engine")


def _ref(engine, psi):
    return engine.reference if psi is None else psi


# -- functionals -------------------------------------------------------------------

def energy_terms(phi, psi, engine) -> list:
    """The ``n + 1`` integrals ``int (phi - psi) MA(phi^j, psi^(n-j))``."""
    n = engine.n
    out = []
    for j in range(n + 1):
        mu = engine.ma_mixed([phi] * j + [psi] * (n - j))
        out.append(engine.integrate(phi, psi, mu))
    return out


def energy_E(phi, psi=None, engine=None) -> Fraction:
    """Monge-Ampère energy ``E(phi, psi)``; ``psi`` defaults to the reference."""
    psi = _ref(engine, psi)
    _check(engine, phi, psi)
    terms = energy_terms(phi, psi, engine)
    return sum(terms, ZERO) / (engine.n + 1)


def functional_I(phi, psi=None, engine=None) -> Fraction:
    """``I(phi, psi) = int (phi - psi) (MA(psi) - MA(phi))``."""
    psi = _ref(engine, psi)
    _check(engine, phi, psi)
    n = engine.n
    a = engine.integrate(phi, psi, engine.ma_mixed([psi] * n))
    b = engine.integrate(phi, psi, engine.ma_mixed([phi] * n))
    return a - b


def functional_J(phi, psi=None, engine=None) -> Fraction:
    """``J_psi(phi) = -E(phi, psi) + int (phi - psi) MA(psi)``."""
    psi = _ref(engine, psi)
    _check(engine, phi, psi)
    return engine.integrate(phi, psi, engine.ma_mixed([psi] * engine.n)) - energy_E(phi, psi, engine)


def f_mu(phi, mu, engine) -> Fraction:
    """``F_mu(phi) = E(phi) - int (phi - ref) dmu``."""
    return energy_E(phi, None, engine) - engine.integrate(phi, engine.reference, mu)


def measure_energy(mu, engine) -> Fraction:
    """Energy of a probability measure, ``(I - J)(phi)`` at the solution of ``MA(phi) = mu``."""
    phi = engine.solve(mu)
    return functional_I(phi, None, engine) - functional_J(phi, None, engine)


def cocycle_defect(phi, chi, psi, engine) -> Fraction:
    """``E(phi, psi) - E(phi, chi) - E(chi, psi)``; zero on exact engines."""
    return (energy_E(phi, psi, engine) - energy_E(phi, chi, engine)
            - energy_E(chi, psi, engine))


def cs_form(a1, a2, b1, b2, background: Sequence, engine) -> Fraction:
    """``V^-1 int (a1 - a2) dd^c (b1 - b2) ^ T`` with ``T`` the background currents."""
    bg = list(background)
    m1 = engine.ma_mixed([b1] + bg)
    m2 = engine.ma_mixed([b2] + bg)
    return engine.integrate(a1, a2, m1) - engine.integrate(a1, a2, m2)


@dataclass
class EnergyReport:
    E: Fraction
    I: Fraction
    J: Fraction
    terms: list
    margins: dict = field(default_factory=dict)

    @property
    def I_minus_J(self) -> Fraction:
        return self.I - self.J


def energy_report(phi, psi, engine) -> EnergyReport:
    psi = _ref(engine, psi)
    terms = energy_terms(phi, psi, engine)
    E = sum(terms, ZERO) / (engine.n + 1)
    I = functional_I(phi, psi, engine)
    J = functional_J(phi, psi, engine)
    n = engine.n
    margins = {
        "i_minus_j.lower": (I - J) - J / n,
        "i_minus_j.upper": n * J - (I - J),
    }
    return EnergyReport(E, I, J, terms, margins)


# -- explicit constants ---------------------------------------------------------------

_DEN = 10 ** 9


def sqrt_upper(x) -> Fraction:
    """Rational upper bound for ``sqrt(x)`` with error below ``1e-9``."""
    x = Fraction(x)
    if x < 0:
        raise DomainError("square root of a negative number")
    N = -((-x.numerator * _DEN * _DEN) // x.denominator)
    r = math.isqrt(N)
    if r * r < N:
        r += 1
    return Fraction(r, _DEN)


def root_upper(x, k: int) -> Fraction:
    """Upper bound for ``x ** (1 / 2**k)``."""
    x = Fraction(x)
    for _ in range(k):
        x = sqrt_upper(x)
    return x


def appendix_constants(n: int) -> dict:
    """Rational upper bounds for the constants of the estimate battery.

    Keys name the inequality they serve. ``C_np`` holds the recursion
    ``C_{n,0} = 1, C_{n,p+1} = C_{n,p} + 4 sqrt((n+1) C_{n,p})``.
    """
    if n < 1:
        raise DomainError("dimension must be at least 1")
    Cp = [Fraction(1)]
    for _ in range(n - 1):
        Cp.append(Cp[-1] + 4 * sqrt_upper((n + 1) * Cp[-1]))
    c_mixed_cs = max(Fraction(8), Cp[n - 1])
    k = 2 ** (n - 1)
    c_quasi = Fraction(2) ** ((n + 1) * k) * Fraction(n + 1) ** (k - 1) * c_mixed_cs ** k
    c_ij = (n + 1) * c_quasi
    # c_ij^(1 - 1/2^(n-1)) as a 2^(n-1)-th root of c_ij^(2^(n-1) - 1)
    c_ij_pow = root_upper(c_ij ** (k - 1), n - 1)
    expand = Fraction((n - 1) ** (n - 1), math.factorial(n - 1))
    c_bg = c_mixed_cs * c_ij_pow * expand
    c_swap = n * c_bg
    c_var = c_swap
    c_lip = 2 * c_var * root_upper(n + 1, n)
    c_lower = Fraction((n + 1) ** (n + 2), math.factorial(n))
    c_holder = n * sqrt_upper(1 + c_lower)
    return {
        "n": n,
        "C_np": Cp,
        "segment_I": Fraction(n),
        "mixed_cs": c_mixed_cs,
        "quasi_triangle": c_quasi,
        "I_by_J": c_ij,
        "mixed_backgrounds": c_bg,
        "background_swap": c_swap,
        "ma_variation": c_var,
        "lipschitz_IJ": c_lip,
        "ma_lower_bound": c_lower,
        "integral_holder": c_holder,
    }


# -- exact power-product comparisons ------------------------------------------------

def _lcm(a, b):
    return a * b // math.gcd(a, b)


def power_leq(lhs, coef, factors) -> bool:
    """Exact test of ``lhs <= coef * prod(base ** exp)`` for bases ``>= 0``."""
    lhs = Fraction(lhs)
    if lhs <= 0:
        return True
    if any(Fraction(b) < 0 for b, _ in factors):
        return False
    q = 1
    for _, e in factors:
        q = _lcm(q, Fraction(e).denominator)
    rhs = Fraction(coef) ** q
    for b, e in factors:
        rhs *= Fraction(b) ** int(Fraction(e) * q)
    return lhs ** q <= rhs


def power_float(coef, factors) -> float:
    out = float(coef)
    for b, e in factors:
        b = float(b)
        if b < 0:
            return float("nan")
        out *= b ** float(e)
    return out


@dataclass
class CheckRow:
    name: str
    sample: int
    lhs: Fraction
    rhs: float
    margin: float
    passed: bool


def _row(name, sample, lhs, coef, factors, tol) -> CheckRow:
    rhs = power_float(coef, factors)
    lhs = Fraction(lhs)
    margin = rhs - float(lhs)
    ok = power_leq(lhs, coef, factors) or (tol > 0 and margin >= -tol)
    return CheckRow(name, sample, lhs, rhs, margin, ok)


class _Memo:
    """Per-sample cache of I and J values."""

    def __init__(self, engine):
        self.engine = engine
        self._I: dict = {}
        self._J: dict = {}

    def I(self, a, b=None):
        key = (a, b)
        if key not in self._I:
            self._I[key] = functional_I(a, b, self.engine)
        return self._I[key]

    def J(self, a, b=None):
        key = (a, b)
        if key not in self._J:
            self._J[key] = functional_J(a, b, self.engine)
        return self._J[key]


def sample_size(n: int) -> int:
    return max(4, 2 * n + 2)


def _checks_for(idx, metrics, t, engine, C, tol) -> list:
    n = engine.n
    Q = Fraction
    e1 = Q(1, 2 ** (n - 1))
    en = Q(1, 2 ** n)
    memo = _Memo(engine)
    I, J = memo.I, memo.J
    ref = engine.reference
    dref = getattr(engine, "d_ref", None)
    rows = []
    p1, p2, p3 = metrics[0], metrics[1], metrics[2]
    one = Q(1)

    # sup bound and its normalized consequence
    x = engine.sup_diff(p1) - engine.integrate(p1, ref, engine.ma_mixed([ref] * n))
    rows.append(_row("sup_bound.lower", idx, -x, 0, [], tol))
    if dref is not None:
        rows.append(_row("sup_bound.upper", idx, x - dref, 0, [], tol))
    q = engine.shift(p1, -engine.sup_diff(p1))
    Eq = energy_E(q, None, engine)
    Jq = J(q)
    rows.append(_row("normalized_energy.upper", idx, Jq + Eq, 0, [], tol))
    if dref is not None:
        rows.append(_row("normalized_energy.lower", idx, -Eq - dref - Jq, 0, [], tol))

    # chains
    Ipq = I(p1, p2)
    Jpq = J(p1, p2)
    Jqp = J(p2, p1)
    rows.append(_row("j_chain.1", idx, Jqp / n - Jpq, 0, [], tol))
    rows.append(_row("j_chain.2", idx, Jpq - Ipq, 0, [], tol))
    rows.append(_row("j_chain.3", idx, Ipq - (n + 1) * Jpq, 0, [], tol))
    rows.append(_row("i_minus_j.lower", idx, Jpq / n - (Ipq - Jpq), 0, [], tol))
    rows.append(_row("i_minus_j.upper", idx, (Ipq - Jpq) - n * Jpq, 0, [], tol))

    # segment estimates
    pt = engine.combine(p1, p2, t)
    rows.append(_row("segment_I", idx, I(pt, p2), C["segment_I"], [(t, 2), (Ipq, 1)], tol))
    rows.append(_row("segment_J", idx, J(pt, p2), one, [(t, 1 + Q(1, n)), (Jpq, 1)], tol))

    # Cauchy-Schwarz with background psi = p3
    lhs = -cs_form(p1, p2, p1, p2, [p3] * (n - 1), engine)
    mx = max(I(p1, p3), I(p2, p3))
    rows.append(_row("mixed_cs", idx, lhs, C["mixed_cs"], [(Ipq, e1), (mx, 1 - e1)], tol))

    # quasi-triangle inequality and its corollary
    rows.append(_row("quasi_triangle", idx, I(p1, p3), C["quasi_triangle"], [(max(Ipq, I(p2, p3)), 1)], tol))
    rows.append(_row("I_by_J", idx, Ipq, C["I_by_J"], [(max(J(p1), J(p2)), 1)], tol))

    # mixed backgrounds
    bg = list(metrics[2:2 + n - 1])
    lhs = -cs_form(p1, p2, p1, p2, bg, engine)
    M = max([J(p1), J(p2)] + [J(b) for b in bg])
    rows.append(_row("mixed_backgrounds", idx, lhs, C["mixed_backgrounds"], [(Ipq, e1), (M, 1 - e1)], tol))

    s1, s2 = metrics[0], metrics[1]
    ph = list(metrics[2:2 + n])
    php = list(metrics[2 + n:2 + 2 * n])
    a_n = engine.integrate(s1, s2, engine.ma_mixed(php))
    a_0 = engine.integrate(s1, s2, engine.ma_mixed(ph))
    M = max([J(s1), J(s2)] + [J(m) for m in ph + php])
    mI = max(I(a, b) for a, b in zip(ph, php))
    rows.append(_row("background_swap", idx, abs(a_n - a_0), C["background_swap"],
                     [(I(s1, s2), en), (mI, en), (M, 1 - e1)], tol))

    f1, f2 = metrics[2], metrics[3]
    lhs = engine.integrate(s1, s2, engine.ma_mixed([f1] * n)) - engine.integrate(s1, s2, engine.ma_mixed([f2] * n))
    M = max(J(f1), J(f2), J(s1), J(s2))
    rows.append(_row("ma_variation", idx, lhs, C["ma_variation"], [(I(s1, s2), en), (I(f1, f2), en), (M, 1 - e1)], tol))

    mJ = max(J(p1), J(p2))
    rows.append(_row("I_lipschitz", idx, abs(I(p1) - I(p2)), C["lipschitz_IJ"], [(Ipq, en), (mJ, 1 - en)], tol))
    rows.append(_row("J_lipschitz", idx, abs(J(p1) - J(p2)), C["lipschitz_IJ"], [(Ipq, en), (mJ, 1 - en)], tol))

    if dref is not None:
        f0 = metrics[0]
        fs = list(metrics[1:n + 1])
        lhs_int = engine.integrate(f0, ref, engine.ma_mixed(fs))
        base = engine.integrate(f0, ref, engine.ma_mixed([ref] * n))
        mJ0 = max(J(m) for m in [f0] + fs)
        # lhs >= base - C (D + max J)  <=>  (base - lhs) <= C (D + max J)
        rows.append(_row("ma_lower_bound", idx, base - lhs_int, C["ma_lower_bound"], [(dref + mJ0, 1)], tol))

        psi = metrics[2]
        ma1 = engine.ma_mixed([p1] * n)
        ma2 = engine.ma_mixed([p2] * n)
        lhs = abs(engine.integrate(psi, ref, ma1) - engine.integrate(psi, ref, ma2))
        B = dref + max(J(psi), J(p1), J(p2))
        rows.append(_row("integral_holder", idx, lhs, C["integral_holder"], [(Ipq, Q(1, 2)), (B, Q(1, 2))], tol))
    return rows


# How each composite constant is assembled from the proven ones.
CONSTANT_NOTES = {
    "segment_I": "n",
    "mixed_cs": "max(8, C_np[n-1])",
    "quasi_triangle": "2^((n+1) 2^(n-1)) (n+1)^(2^(n-1)-1) mixed_cs^(2^(n-1))",
    "I_by_J": "(n+1) quasi_triangle",
    "mixed_backgrounds": "mixed_cs I_by_J^(1-1/2^(n-1)) (n-1)^(n-1)/(n-1)!",
    "background_swap": "n mixed_backgrounds",
    "ma_variation": "background_swap",
    "lipschitz_IJ": "2 ma_variation (n+1)^(1/2^n)",
    "ma_lower_bound": "(n+1)^(n+2)/n!",
    "integral_holder": "n sqrt(1 + ma_lower_bound)",
}


@dataclass
class MarginReport:
    rows: list
    constants: dict = field(default_factory=dict)

    def constant_lines(self) -> list:
        """``name = value  (composition)`` for every constant used."""
        out = []
        for k, note in CONSTANT_NOTES.items():
            if k in self.constants:
                out.append(f"{k} = {float(self.constants[k]):.6g}  ({note})")
        return out

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def summary(self) -> dict:
        out: dict = {}
        for r in self.rows:
            cur = out.get(r.name)
            if cur is None:
                out[r.name] = {"min_margin": r.margin, "samples": 1, "failures": int(not r.passed)}
            else:
                cur["min_margin"] = min(cur["min_margin"], r.margin)
                cur["samples"] += 1
                cur["failures"] += int(not r.passed)
        return dict(sorted(out.items()))

    def failures(self) -> list:
        return [r for r in self.rows if not r.passed]


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("NAPT_THREADS", "1")))
    except ValueError:
        return 1


def check_estimates(samples: Sequence, engine, constants: dict | None = None,
                    tol: float = 0.0, threads: int | None = None) -> MarginReport:
    """Evaluate the estimate battery on ``(metrics, t)`` samples.

    Each sample carries ``max(4, 2n + 2)`` psh metrics and a rational ``t`` in
    ``[0, 1]``. Rows are sorted by inequality name, then sample index, so the
    report does not depend on the evaluation order.
    """
    if getattr(engine, "certified", True) is False:
        raise ValidationRefusal("engine data failed positivity validation; estimates are not certified")
    C = constants or appendix_constants(engine.n)
    need = sample_size(engine.n)
    for metrics, _ in samples:
        if len(metrics) < need:
            raise DomainError(f"each sample needs {need} metrics")
    work = list(enumerate(samples))

    def run(item):
        i, (metrics, t) = item
        return _checks_for(i, metrics, Fraction(t), engine, C, tol)

    nt = threads if threads is not None else _threads()
    if nt > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=nt) as ex:
            chunks = list(ex.map(run, work))
    else:
        chunks = [run(w) for w in work]
    rows = [r for ch in chunks for r in ch]
    rows.sort(key=lambda r: (r.name, r.sample))
    return MarginReport(rows, {k: v for k, v in C.items() if k in CONSTANT_NOTES})


# -- identity suite ------------------------------------------------------------------

@dataclass
class IdentityRow:
    name: str
    sample: int
    value: Fraction
    passed: bool


def check_identities(samples: Sequence, engine, tol: float = 0.0) -> list:
    """Exact identities on ``(metrics, t)`` samples; rows sorted like the battery."""
    n = engine.n
    rows = []

    def eq(name, i, val):
        val = Fraction(val)
        rows.append(IdentityRow(name, i, val, val == 0 or abs(float(val)) <= tol))

    def nonneg(name, i, val):
        val = Fraction(val)
        rows.append(IdentityRow(name, i, val, val >= 0 or float(val) >= -tol))

    for i, (ms, t) in enumerate(samples):
        a, b, c, d = ms[0], ms[1], ms[2], ms[3]
        bg = [c] * (n - 1)
        m = engine.ma_mixed([a] * n)
        eq("ma.total", i, m.total_mass() - 1)
        diff = engine.ma_mixed([engine.shift(a, Fraction(3, 2))] * n) - m
        eq("ma.shift", i, sum((abs(x) for x in diff.values()), ZERO))
        eq("mixed.total", i, engine.ma_mixed([a] + [b] * (n - 1)).total_mass() - 1)
        eq("ibp", i, cs_form(a, b, c, d, bg, engine) - cs_form(c, d, a, b, bg, engine))
        nonneg("cauchy_schwarz", i, -cs_form(a, b, a, b, bg, engine))
        eq("cocycle", i, cocycle_defect(a, b, c, engine))
        eq("antisymmetry", i, energy_E(a, b, engine) + energy_E(b, a, engine))
        eq("translation", i, energy_E(engine.shift(a, Fraction(2, 3)), b, engine) - energy_E(a, b, engine) - Fraction(2, 3))
        eq("I.split", i, functional_I(a, b, engine) - functional_J(a, b, engine) - functional_J(b, a, engine))
        eq("I.symmetric", i, functional_I(a, b, engine) - functional_I(b, a, engine))
    rows.sort(key=lambda r: (r.name, r.sample))
    return rows
