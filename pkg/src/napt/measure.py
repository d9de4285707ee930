"""Finite atomic measures with exact rational masses."""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Hashable, Iterable, Iterator, Mapping

from .errors import DomainError


def point_key(p):
    """Canonical ordering key for atom locations of any engine."""
    key = getattr(p, "sort_key", None)
    if key is not None:
        return (0, key())
    if isinstance(p, tuple):
        return (1, p)
    return (2, str(p))


class AtomicMeasure(Mapping):
    """A finite signed measure ``sum m_i * delta_{x_i}``.

    Locations must be hashable. Zero masses are never stored. Passing
    ``probability=True`` asserts the result is a probability measure and
    raises :class:`DomainError` otherwise.
    """

    __slots__ = ("_atoms", "_hash")

    def __init__(self, atoms: Mapping | Iterable = (), probability: bool = False):
        acc: dict[Hashable, Fraction] = {}
        items = atoms.items() if isinstance(atoms, Mapping) else atoms
        for p, m in items:
            m = Fraction(m)
            acc[p] = acc.get(p, Fraction(0)) + m
        self._atoms = {p: m for p, m in acc.items() if m != 0}
        self._hash = None
        if probability and not self.is_probability():
            raise DomainError(
                f"not a probability measure (total {self.total_mass()}, "
                f"min mass {min(self._atoms.values(), default=0)})"
            )

    def __getitem__(self, p) -> Fraction:
        return self._atoms.get(p, Fraction(0))

    def __iter__(self) -> Iterator:
        return iter(sorted(self._atoms, key=point_key))

    def __len__(self) -> int:
        return len(self._atoms)

    def __contains__(self, p) -> bool:
        return p in self._atoms

    def __eq__(self, other) -> bool:
        if isinstance(other, AtomicMeasure):
            return self._atoms == other._atoms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._atoms.items()))
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(f"{p!r}: {m}" for p, m in self.items())
        return f"AtomicMeasure({{{body}}})"

    def __add__(self, other: AtomicMeasure) -> AtomicMeasure:
        return AtomicMeasure(list(self._atoms.items()) + list(other._atoms.items()))

    def __neg__(self) -> AtomicMeasure:
        return self.scale(-1)

    def __sub__(self, other: AtomicMeasure) -> AtomicMeasure:
        return self + (-other)

    def __mul__(self, c) -> AtomicMeasure:
        return self.scale(c)

    __rmul__ = __mul__

    def __truediv__(self, c) -> AtomicMeasure:
        return self.scale(1 / Fraction(c))

    def scale(self, c) -> AtomicMeasure:
        c = Fraction(c)
        return AtomicMeasure({p: c * m for p, m in self._atoms.items()})

    def total_mass(self) -> Fraction:
        return sum(self._atoms.values(), Fraction(0))

    def is_probability(self) -> bool:
        return all(m >= 0 for m in self._atoms.values()) and self.total_mass() == 1

    def is_positive(self) -> bool:
        return all(m >= 0 for m in self._atoms.values())

    def support(self) -> list:
        return list(self)

    def integrate(self, f: Callable) -> Fraction:
        """Return ``sum m_i f(x_i)``; ``f`` must be exact on the atoms."""
        return sum((m * f(p) for p, m in self._atoms.items()), Fraction(0))

    def pushforward(self, f: Callable) -> AtomicMeasure:
        return AtomicMeasure([(f(p), m) for p, m in self._atoms.items()])


def add(mu: AtomicMeasure, nu: AtomicMeasure) -> AtomicMeasure:
    return mu + nu


def scale(mu: AtomicMeasure, c) -> AtomicMeasure:
    return mu.scale(c)


def total_mass(mu: AtomicMeasure) -> Fraction:
    return mu.total_mass()


def is_probability(mu: AtomicMeasure) -> bool:
    return mu.is_probability()


def dirac(p, mass=1) -> AtomicMeasure:
    return AtomicMeasure({p: Fraction(mass)})


def format_mass(m: Fraction) -> str:
    """Masses always print as ``p/q``, integers included."""
    m = Fraction(m)
    return f"{m.numerator}/{m.denominator}"
