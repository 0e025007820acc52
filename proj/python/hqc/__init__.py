"""Hybrid quantum-classical measurement dynamics."""

from ._core import (
    IoError,
    NumericalBreakdown,
    PhaseGrid,
    RunConfig,
    describe,
    execute,
    gaussian_decoherence,
    gaussian_half_time,
    gaussian_state,
    harmonic_period,
    load_config,
    min_eigenvalue,
    parse_config,
    run,
    von_neumann_entropy,
)

EXIT_CLEAN = 0
EXIT_FAILURE = 1
EXIT_VIOLATION = 2

__all__ = [
    "EXIT_CLEAN",
    "EXIT_FAILURE",
    "EXIT_VIOLATION",
    "IoError",
    "NumericalBreakdown",
    "PhaseGrid",
    "RunConfig",
    "describe",
    "execute",
    "gaussian_decoherence",
    "gaussian_half_time",
    "gaussian_state",
    "harmonic_period",
    "load_config",
    "min_eigenvalue",
    "parse_config",
    "run",
    "von_neumann_entropy",
]
