"""Exception types shared across the toolkit."""

from __future__ import annotations

__all__ = [
    "EscvError",
    "DataError",
    "ConfigError",
    "ConvergenceError",
    "DegenerateGridError",
    "UnsupportedSchemeError",
]


class EscvError(Exception):
    """Base class for errors raised by this package."""


class DataError(EscvError):
    """Invalid or malformed input data."""


class ConfigError(EscvError):
    """Invalid run configuration (bad key, bad value, unknown preset)."""


class UnsupportedSchemeError(ConfigError):
    """Operation requires a resampling scheme with held-out rows."""


class DegenerateGridError(DataError):
    """Criterion grid collapsed (all pseudo solution paths are null)."""


class ConvergenceError(EscvError):
    """Coordinate descent hit its iteration cap.

    Carries the last iterate and its KKT residual so callers can inspect
    how far from optimal the solver stopped.
    """

    def __init__(self, message, *, beta=None, kkt=None, lam=None,
                 grid_index=None, fold=None):
        super().__init__(message)
        self.beta = beta
        self.kkt = kkt
        self.lam = lam
        self.grid_index = grid_index
        self.fold = fold
