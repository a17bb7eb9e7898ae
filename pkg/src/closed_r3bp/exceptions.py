"""Exception hierarchy for closed-r3bp.

Every error carries the process exit code the CLI uses when it surfaces.
"""

from __future__ import annotations


class ClosedR3BPError(Exception):
    """Base class for all closed-r3bp errors."""

    exit_code: int = 2


class DomainError(ClosedR3BPError, ValueError):
    """Physical input outside the admissible domain (e >= 1, a* <= a1, ...)."""

    exit_code = 3


class ConfigurationError(ClosedR3BPError, ValueError):
    """Inconsistent configuration or API usage (mismatched nbk, unknown variable)."""

    exit_code = 2


class EvaluationError(ClosedR3BPError):
    """A series could not be evaluated, or its arithmetic produced a non-finite coefficient."""

    exit_code = 2


class SingularEvaluationError(EvaluationError):
    """A symbol with a negative exponent was evaluated at zero."""


class ResonanceError(ClosedR3BPError):
    """A divisor s1 n* + s4 n1 fell below the small-divisor threshold."""

    exit_code = 4

    def __init__(self, s1: int, s4: int, value: float, threshold: float) -> None:
        self.s1 = s1
        self.s4 = s4
        self.value = value
        self.threshold = threshold
        super().__init__(
            f"small divisor for (s1, s4) = ({s1}, {s4}): "
            f"|{value:.6e}| < {threshold:.3e}"
        )


class EncounterError(ClosedR3BPError):
    """The particle came closer to the secondary than the encounter radius."""

    exit_code = 5

    def __init__(self, t: float, distance: float, radius: float) -> None:
        self.t = t
        self.distance = distance
        self.radius = radius
        super().__init__(
            f"close encounter at t={t:.6f} y: distance {distance:.6e} AU < {radius:.6e} AU"
        )


class NormalizationError(ClosedR3BPError):
    """A normalization post-condition failed or a Lie series did not terminate."""

    exit_code = 6
