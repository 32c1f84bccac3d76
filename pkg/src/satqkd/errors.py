"""Exception types shared across the package."""
from __future__ import annotations


class SatQKDError(Exception):
    """Base class for every error raised by satqkd."""


class InputError(SatQKDError, ValueError):
    """An argument lies outside the documented domain of an operation."""


class QuadratureError(SatQKDError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, value: float, error_estimate: float):
        super().__init__(f"{message} (value={value!r}, error estimate={error_estimate!r})")
        self.value = value
        self.error_estimate = error_estimate


class NoSignalError(SatQKDError, ArithmeticError):
    """The detection probability is zero, so a QBER is undefined."""


class ScenarioError(SatQKDError):
    """A scenario or site file failed to parse or validate.

    ``issues`` holds one human-readable line per violation.
    """

    def __init__(self, source: str, issues: list[str]):
        self.source = source
        self.issues = list(issues)
        joined = "\n  ".join(self.issues)
        super().__init__(f"{source}: {len(self.issues)} problem(s)\n  {joined}")
