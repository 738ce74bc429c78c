"""Tabled Horn clause evaluation with bottom-up tabling."""

from ._core import (
    Engine,
    EngineError,
    IllegalModeError,
    OracleError,
    ParseError,
    iteration_log,
    least_model,
    transform,
)

__all__ = [
    "Engine",
    "EngineError",
    "IllegalModeError",
    "OracleError",
    "ParseError",
    "iteration_log",
    "least_model",
    "transform",
]
