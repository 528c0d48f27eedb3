"""Exception types shared across the package."""

from __future__ import annotations


class QuadratureError(RuntimeError):
    """An integral did not converge to the requested tolerance.

    Raised instead of returning a silently inaccurate value; carries the
    estimated error bound when one is available.
    """

    def __init__(self, message: str, error_bound: float | None = None):
        super().__init__(message)
        self.error_bound = error_bound


class ConvergenceError(RuntimeError):
    """A step-halving self-check found the discretization untrustworthy."""


class StepSizeError(RuntimeError):
    """A fixed-step integration failed its half-step acceptance check."""


class ConfigError(ValueError):
    """One or more scenario-configuration problems.

    ``errors`` holds every problem found, as (line_number, message)
    pairs; line 0 marks file-level problems with no specific line.
    """

    def __init__(self, errors: list[tuple[int, str]]):
        self.errors = list(errors)
        lines = "; ".join(f"line {n}: {m}" if n else m for n, m in self.errors)
        super().__init__(lines)
