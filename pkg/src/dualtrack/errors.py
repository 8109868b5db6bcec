"""Exception types shared across the library.

Argument/validation problems raise plain ``ValueError`` (or ``ConfigError``,
which is a ``ValueError``); the classes below mark operational failures that a
caller may want to catch and handle differently.
"""


class DualTrackError(Exception):
    """Base class for operational failures raised by this package."""


class GenerationError(DualTrackError):
    """Random generation could not meet its contract within the retry budget."""


class InfeasibleProblemError(DualTrackError):
    """The coupling constraint has no solution (b lies outside the range of A)."""


class ToleranceError(DualTrackError):
    """An inner solve hit its iteration cap before reaching the target accuracy."""


class DivergenceError(DualTrackError):
    """The outer iteration diverged (optimality gap above the safety threshold)."""


class ConfigError(ValueError):
    """Invalid run configuration (unknown fields, inconsistent strategy options)."""
