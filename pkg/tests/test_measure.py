from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from napt.complex import EdgePoint, Vertex
from napt.measure import AtomicMeasure, add, dirac, format_mass, is_probability, scale, total_mass

a, b, m = Vertex("a"), Vertex("b"), EdgePoint("e", F(1, 2))


def test_cancellation_gives_empty_measure():
    assert add(dirac(a), -dirac(a)) == AtomicMeasure()
    assert len(add(dirac(a), -dirac(a))) == 0


def test_halving_reference_gives_probability():
    assert is_probability(scale(dirac(a) + dirac(b), F(1, 2)))
    assert not is_probability(dirac(a) + dirac(b))


def test_total_mass_signed():
    assert total_mass(dirac(m, 2) - dirac(a)) == 1


def test_zero_atoms_are_pruned():
    mu = AtomicMeasure({a: 0, b: F(1, 3)})
    assert list(mu) == [b]
    assert a not in mu and mu[a] == 0


def test_probability_flag_is_checked():
    with pytest.raises(ValueError):
        AtomicMeasure({a: F(1, 2)}, probability=True)
    with pytest.raises(ValueError):
        AtomicMeasure({a: 2, b: -1}, probability=True)


def test_canonical_point_order():
    mu = AtomicMeasure({m: 1, b: 1, a: 1, EdgePoint("d", F(1, 3)): 1})
    assert [getattr(p, "label") for p in mu] == ["a", "b", "d@1/3", "e@1/2"]


def test_format_mass_always_has_denominator():
    assert format_mass(F(1)) == "1/1"
    assert format_mass(F(-3, 6)) == "-1/2"


def test_integrate_and_pushforward():
    mu = AtomicMeasure({a: F(1, 4), b: F(3, 4)})
    assert mu.integrate(lambda p: 4 if p == a else 0) == 1
    assert mu.pushforward(lambda p: a) == dirac(a)


masses = st.dictionaries(st.integers(0, 5), st.fractions(min_value=-3, max_value=3, max_denominator=6))


@given(masses, masses)
def test_addition_is_commutative_and_mass_additive(x, y):
    mx, my = AtomicMeasure(x), AtomicMeasure(y)
    assert mx + my == my + mx
    assert (mx + my).total_mass() == mx.total_mass() + my.total_mass()
    assert all(v != 0 for v in (mx + my).values())


@given(masses, st.fractions(min_value=-2, max_value=2, max_denominator=5))
def test_scaling_is_linear(x, c):
    mx = AtomicMeasure(x)
    assert scale(mx, c).total_mass() == c * mx.total_mass()
    assert scale(mx, c) + scale(mx, 1 - c) == mx
