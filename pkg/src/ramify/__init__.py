"""Quasimetric relaxation analysis and branched optimal transport.

Two layers:

* finite quasimetric tables: axiom checking, relaxation constants sigma and
  sigma_n, and the induced chain pseudometric (``quasimetric``);
* atomic probability measures under the concave transport cost: optimal
  plans, branched transport paths, the geodesic distance realized as the
  minimum path cost, and measure-space geodesic curves (``measures``,
  ``graphs``, ``topology``, ``curves``).

The ``ramify`` CLI wires these to JSON/CSV files and SVG figures.
"""

__version__ = "0.1.0"

from .curves import (MeasureCurve, Move, arc_reparametrize, curve_length,
                     geodesic_check, metric_derivative, path_to_curve,
                     uniform_distance, variation_length)
from .graphs import (BalanceReport, CycleError, PathDecomposition,
                     TransportGraph, decompose, find_cycle, is_acyclic,
                     m_alpha, plan_to_graph, remove_cycles, sum_graphs,
                     validate_graph)
from .measures import (AtomicMeasure, EnumerationCapExceeded, PlanResult,
                       TransportPlan, UnsupportedExponent, compose_plans,
                       dirac, empirical_sigma, enumerate_extreme_plans,
                       euclid, j_alpha, measure_from_weights, plan_cost)
from .quasimetric import (AxiomInconsistency, FiniteQuasimetric,
                          MalformedTable, RelaxationReport, check_axioms,
                          continuity_constant, hop_bounded_cost,
                          induced_pseudometric, relaxation_constant,
                          relaxation_report, sigma_n)
from .rng import SplitMix64
from .topology import (ExactCapExceeded, TopologyResult, d_j_alpha,
                       optimize_topology, stabilization_profile)

__all__ = [
    "AtomicMeasure", "AxiomInconsistency", "BalanceReport", "CycleError",
    "EnumerationCapExceeded", "ExactCapExceeded", "FiniteQuasimetric",
    "MalformedTable", "MeasureCurve", "Move", "PathDecomposition",
    "PlanResult", "RelaxationReport", "SplitMix64", "TopologyResult",
    "TransportGraph", "TransportPlan", "UnsupportedExponent",
    "arc_reparametrize", "check_axioms", "compose_plans",
    "continuity_constant", "curve_length", "d_j_alpha", "decompose",
    "dirac", "empirical_sigma", "enumerate_extreme_plans", "euclid",
    "find_cycle", "geodesic_check", "hop_bounded_cost",
    "induced_pseudometric", "is_acyclic", "j_alpha", "m_alpha",
    "measure_from_weights", "metric_derivative", "optimize_topology",
    "path_to_curve", "plan_cost", "plan_to_graph", "relaxation_constant",
    "relaxation_report", "remove_cycles", "sigma_n", "stabilization_profile",
    "sum_graphs", "uniform_distance", "validate_graph", "variation_length",
]
