"""Optimal exclusive-use spectrum-lease durations.

A regulator leases identical channels to network operators through repeated
auctions.  This package models operator revenue as a stationary AR(1)
process, evaluates expected auction revenue for arbitrary entrant sets,
computes the Max-Min entry equilibrium, and optimizes the lease duration
against the regulator's utilization objective.
"""

__version__ = "0.1.0"

from .market import (
    UNBOUNDED,
    EpochStats,
    Market,
    OperatorParams,
    RevenueTrace,
    epoch_stats,
    homogeneous_market,
    simulate_ar1,
)
from .revenue import (
    BetaTable,
    EntrantSet,
    QuadratureConfig,
    compute_beta_table,
    mc_revenue_oracle,
    revenue_hetero,
    revenue_homog,
)
from .game import (
    REGULATOR_VIEW,
    TRUE_VIEW,
    MarketGame,
    ObjectiveValue,
    RevenueView,
    largest_entrants,
    self_view,
)
from .optimizer import (
    SolveResult,
    brute_force,
    eval_counter_probe,
    solve_algorithm1,
    solve_homogeneous,
    solve_subop,
)

__all__ = [
    "UNBOUNDED",
    "EpochStats",
    "Market",
    "OperatorParams",
    "RevenueTrace",
    "epoch_stats",
    "homogeneous_market",
    "simulate_ar1",
    "BetaTable",
    "EntrantSet",
    "QuadratureConfig",
    "compute_beta_table",
    "mc_revenue_oracle",
    "revenue_hetero",
    "revenue_homog",
    "REGULATOR_VIEW",
    "TRUE_VIEW",
    "MarketGame",
    "ObjectiveValue",
    "RevenueView",
    "largest_entrants",
    "self_view",
    "SolveResult",
    "brute_force",
    "eval_counter_probe",
    "solve_algorithm1",
    "solve_homogeneous",
    "solve_subop",
]
