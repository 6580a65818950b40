"""Kinetic wealth-exchange simulation: Monte Carlo, moment analytics, Fokker-Planck and tail estimators."""

__version__ = "0.1.0"

from .analytics import (
    MomentBound,
    SpreadOde,
    empirical_spread,
    growth_bound_rate,
    moment_bound_rate,
    spread_limit_solution,
    spread_rhs_consistent,
    spread_rhs_paper,
)
from .estimators import Histogram, TailFit, hill_estimator, histogram, l1_distance, loglog_ccdf_slope, normalize
from .fokker_planck import (
    FpGrid,
    ParetoStationary,
    fp_solve_to_steady,
    fp_step,
    pareto_exponent,
    sample_stationary,
    stationary_cdf,
    stationary_pdf,
)
from .mc import SimConfig, SimState, SnapshotSeries, init, run, run_ensemble, sweep
from .model import NoiseKind, NoiseModel, Population, TradeParams, WealthPair, apply_trade, is_admissible, sample_noise

__all__ = [
    "MomentBound", "SpreadOde", "empirical_spread", "growth_bound_rate", "moment_bound_rate",
    "spread_limit_solution", "spread_rhs_consistent", "spread_rhs_paper",
    "Histogram", "TailFit", "hill_estimator", "histogram", "l1_distance", "loglog_ccdf_slope", "normalize",
    "FpGrid", "ParetoStationary", "fp_solve_to_steady", "fp_step", "pareto_exponent",
    "sample_stationary", "stationary_cdf", "stationary_pdf",
    "SimConfig", "SimState", "SnapshotSeries", "init", "run", "run_ensemble", "sweep",
    "NoiseKind", "NoiseModel", "Population", "TradeParams", "WealthPair", "apply_trade",
    "is_admissible", "sample_noise",
]
