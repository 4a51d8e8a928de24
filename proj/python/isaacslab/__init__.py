"""Bellman-Isaacs value fields, feedback synthesis and Monte-Carlo
verification for two-player zero-sum stochastic differential games."""

from ._core import (
    ConfigError,
    Error,
    Expression,
    ExprError,
    GameSpec,
    Grid,
    SimulationError,
    SolverError,
    ValueField,
    __version__,
    h0_cv,
    hamiltonian,
    load_scenario_spec,
    load_spec,
    min_time_levels,
    payoff,
    residual_max,
    run_cli,
    solve,
    verify_saddle,
)

__all__ = [
    "ConfigError",
    "Error",
    "Expression",
    "ExprError",
    "GameSpec",
    "Grid",
    "SimulationError",
    "SolverError",
    "ValueField",
    "__version__",
    "h0_cv",
    "hamiltonian",
    "load_scenario_spec",
    "load_spec",
    "min_time_levels",
    "payoff",
    "residual_max",
    "run_cli",
    "solve",
    "verify_saddle",
]
