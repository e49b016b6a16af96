"""Derivative-free constrained trust-region optimization."""

from ._core import (
    BenchmarkResult,
    DimensionMismatch,
    EmptyResults,
    InfeasibleStart,
    InvalidConfig,
    IterationRecord,
    NonFiniteEvaluation,
    NowpacError,
    OptimizationResult,
    Problem,
    SingularGeometry,
    SolverConfig,
    SubproblemInfeasibleStart,
    UnknownProblemId,
    aggregate,
    cli,
    config_field_names,
    criticality,
    emit_table,
    history_text,
    mfn_model,
    optimize,
    problem,
    problem_names,
    run_benchmark,
    trial_step,
)

__all__ = [name for name in dir() if not name.startswith("_")]
