"""Dynamic prediction equilibria in the Vickrey point-queue model."""

from ._dpe import (
    DomainError,
    ParseError,
    PiecewiseLinearFn,
    PreconditionError,
    RunResult,
    Scenario,
    SimulationError,
    ValidationError,
    compose_monotone,
    load_scenario,
    parse_scenario,
    pointwise_min,
    run,
    run_counterexample_demo,
    train_regression,
)

__all__ = [
    "DomainError",
    "ParseError",
    "PiecewiseLinearFn",
    "PreconditionError",
    "RunResult",
    "Scenario",
    "SimulationError",
    "ValidationError",
    "compose_monotone",
    "load_scenario",
    "parse_scenario",
    "pointwise_min",
    "run",
    "run_counterexample_demo",
    "train_regression",
]
