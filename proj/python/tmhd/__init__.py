"""Stochastic tamed MHD on the 3-torus: Galerkin simulator bindings."""

from ._core import (
    BUILD_ID,
    DIAGNOSTICS_COLUMNS,
    ConfigError,
    SimConfig,
    TmhdError,
    read_snapshot,
    run_command,
    simulate,
    strong_order,
    verify,
)

COLUMNS = tuple(DIAGNOSTICS_COLUMNS.split(","))

__all__ = [
    "BUILD_ID",
    "COLUMNS",
    "ConfigError",
    "SimConfig",
    "TmhdError",
    "read_snapshot",
    "run_command",
    "simulate",
    "strong_order",
    "verify",
]
