"""Analyser for grouped stochastic process-algebra models.

Parses model files, derives the aggregated counting semantics, generates
moment-closure or linear-noise ODE systems, runs exact stochastic simulation,
and reports switch-point diagnostics that localise where the deterministic
approximation is least accurate.
"""

from .analysis import (
    AnalysisOptions,
    AnalysisRunner,
    EvaluatedSeries,
    SwitchPointReport,
    crossing_times,
    evaluate_expression,
    run_comparison,
    run_odes_analysis,
    run_simulation_analysis,
    switch_point_report,
)
from .errors import GpaError, GpaRuntimeError, GpaSyntaxError, GpaValidationError
from .language import format_model_file, parse_model, validate
from .moments import (
    CovEntry,
    MinTerm,
    MomentIndex,
    MomentSystem,
    all_moment_indices,
    collect_min_terms,
    generate_lna_odes,
    generate_moment_odes,
    initial_values,
    required_order,
)
from .numerics import DataSet, build_grid, integrate_rk4
from .semantics import (
    StateIndex,
    TransitionClass,
    VectorField,
    apparent_rate,
    build_state_index,
    build_vector_field,
    enumerate_transition_classes,
    explore_derivatives,
    is_split_free,
)
from .ssa import MomentAccumulator, propensities, replication_stream, run_simulation, simulate_replication

__all__ = [
    "AnalysisOptions",
    "AnalysisRunner",
    "CovEntry",
    "DataSet",
    "EvaluatedSeries",
    "GpaError",
    "GpaRuntimeError",
    "GpaSyntaxError",
    "GpaValidationError",
    "MinTerm",
    "MomentAccumulator",
    "MomentIndex",
    "MomentSystem",
    "StateIndex",
    "SwitchPointReport",
    "TransitionClass",
    "VectorField",
    "all_moment_indices",
    "apparent_rate",
    "build_grid",
    "build_state_index",
    "build_vector_field",
    "collect_min_terms",
    "crossing_times",
    "enumerate_transition_classes",
    "evaluate_expression",
    "explore_derivatives",
    "format_model_file",
    "generate_lna_odes",
    "generate_moment_odes",
    "initial_values",
    "integrate_rk4",
    "is_split_free",
    "parse_model",
    "propensities",
    "replication_stream",
    "required_order",
    "run_comparison",
    "run_odes_analysis",
    "run_simulation",
    "run_simulation_analysis",
    "simulate_replication",
    "switch_point_report",
    "validate",
]

__version__ = "0.1.0"
