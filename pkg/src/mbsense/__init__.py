"""Multiband joint detection for wideband spectrum sensing.

Analytic energy-detector statistics per subchannel, convex optimization
of the per-subchannel thresholds (throughput maximization under
aggregate interference budgets, or interference minimization under a
throughput floor), a uniform-threshold baseline, independent reference
solvers, and a Monte Carlo simulator that validates the analytic model.
"""
from .detection import (
    InfeasibleSubchannelError,
    NoiseModel,
    StatisticMoments,
    SubchannelParams,
    ThresholdBounds,
    pf_derivatives,
    pm_derivatives,
    prob_detection,
    prob_false_alarm,
    prob_miss,
    statistic_moments,
    threshold_bounds,
)
from .gaussian import qfunc, qfunc_inv
from .optimize import (
    FeasibilityReport,
    KKTMultipliers,
    PrimaryUserGroup,
    ProblemSpec,
    Solution,
    SolverOptions,
    check_feasibility,
    coordinate_descent_solve,
    kkt_residual,
    oracle_solve,
    solve_p2,
    solve_p3,
    solve_uniform_baseline,
)
from .scenario import (
    Scenario,
    ScenarioError,
    dumps_scenario,
    load_scenario,
    loads_scenario,
    save_scenario,
    table1_scenario,
)
from .simulate import (
    ChannelRealization,
    EmpiricalRates,
    TrialBatch,
    empirical_rates,
    make_channel,
    simulate_energies,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "qfunc",
    "qfunc_inv",
    "NoiseModel",
    "SubchannelParams",
    "StatisticMoments",
    "ThresholdBounds",
    "InfeasibleSubchannelError",
    "statistic_moments",
    "prob_false_alarm",
    "prob_detection",
    "prob_miss",
    "threshold_bounds",
    "pf_derivatives",
    "pm_derivatives",
    "ChannelRealization",
    "make_channel",
    "TrialBatch",
    "simulate_energies",
    "EmpiricalRates",
    "empirical_rates",
    "PrimaryUserGroup",
    "ProblemSpec",
    "SolverOptions",
    "KKTMultipliers",
    "Solution",
    "FeasibilityReport",
    "check_feasibility",
    "solve_p2",
    "solve_p3",
    "solve_uniform_baseline",
    "oracle_solve",
    "coordinate_descent_solve",
    "kkt_residual",
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "loads_scenario",
    "save_scenario",
    "dumps_scenario",
    "table1_scenario",
]
