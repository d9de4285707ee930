"""Exact non-Archimedean pluripotential theory on metric graphs and toric models."""

from .algebra import AlgebraEngine, ModelMetric, RestrictionAlgebra, a_ma_mixed, a_validate
from .complex import EdgePoint, MetricGraph, Subdivision, Vertex, refine, subdivide, validate_graph
from .energy import (
    appendix_constants,
    check_estimates,
    check_identities,
    energy_E,
    functional_I,
    functional_J,
    measure_energy,
)
from .errors import (
    DomainError,
    InfeasibleError,
    InvariantError,
    NaptError,
    ParseError,
    PreconditionError,
    ValidationRefusal,
)
from .graph import GraphEngine, PLMetric, envelope, ma, solve
from .measure import AtomicMeasure
from .toric import LatticePolytope, ToricEngine, TropicalMetric, t_envelope, t_ma, t_solve

__version__ = "0.1.0"

__all__ = [
    "AlgebraEngine", "AtomicMeasure", "DomainError", "EdgePoint", "GraphEngine",
    "InfeasibleError", "InvariantError", "LatticePolytope", "MetricGraph", "ModelMetric",
    "NaptError", "PLMetric", "ParseError", "PreconditionError", "RestrictionAlgebra",
    "Subdivision", "ToricEngine", "TropicalMetric", "ValidationRefusal", "Vertex",
    "a_ma_mixed", "a_validate", "appendix_constants", "check_estimates", "check_identities",
    "energy_E", "envelope", "functional_I", "functional_J", "ma", "measure_energy", "refine",
    "solve", "subdivide", "t_envelope", "t_ma", "t_solve", "validate_graph",
]
