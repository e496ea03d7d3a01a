"""Extremum seeking averaging, gain tuning and simulation."""

from ._esgain import (
    AveragingResult,
    BoundsLedger,
    CapacityError,
    Expr,
    Gains,
    InfeasibleError,
    InvalidArgument,
    OverflowError,
    ParseError,
    Scheme,
    average,
    build_ledger,
    convergence_time,
    log_grid,
    performance_map,
    simulate,
    solve_closed_form,
    solve_numeric,
    tune_filtered,
    tune_frequency,
)

__version__ = "0.1.0"

__all__ = [
    "AveragingResult",
    "BoundsLedger",
    "CapacityError",
    "Expr",
    "Gains",
    "InfeasibleError",
    "InvalidArgument",
    "OverflowError",
    "ParseError",
    "Scheme",
    "average",
    "build_ledger",
    "convergence_time",
    "log_grid",
    "performance_map",
    "simulate",
    "solve_closed_form",
    "solve_numeric",
    "tune_filtered",
    "tune_frequency",
]
