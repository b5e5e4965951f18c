"""Python bindings for the mrta_sim simulator core."""

from ._core import (
    Error,
    InvalidInput,
    IoError,
    ParseError,
    ScenarioError,
    Unreachable,
    allocate,
    collect_travel_times,
    plan,
    render,
    report,
    run,
    step_robot,
)

__all__ = [
    "Error",
    "InvalidInput",
    "IoError",
    "ParseError",
    "ScenarioError",
    "Unreachable",
    "allocate",
    "collect_travel_times",
    "plan",
    "render",
    "report",
    "run",
    "step_robot",
]
