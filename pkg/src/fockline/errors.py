"""Exception hierarchy shared by every fockline module."""

from __future__ import annotations


class FocklineError(Exception):
    """Base class for all errors raised by fockline."""


class UndeclaredMode(FocklineError):
    """A mode map or source references a path that is not declared."""


class NonIsometricMap(FocklineError):
    """A mode map fails the isometry check."""


class UnknownMode(FocklineError):
    """A detector names a mode outside the state's path universe."""


class DuplicateMode(FocklineError):
    """The same mode is listed twice where distinct modes are required."""


class CircuitSyntaxError(FocklineError):
    """Malformed circuit text.

    Carries a 1-based ``line`` and ``column`` and the set of tokens that
    would have been accepted at that point (possibly empty).
    """

    def __init__(self, message: str, line: int, column: int,
                 expected: frozenset[str] | set[str] = frozenset()):
        self.message = message
        self.line = line
        self.column = column
        self.expected = frozenset(expected)
        super().__init__(str(self))

    def __str__(self) -> str:
        text = f"{self.line}:{self.column}: {self.message}"
        if self.expected:
            text += f" (expected one of: {', '.join(sorted(self.expected))})"
        return text


class BindError(FocklineError):
    """Parameters could not be bound to numbers."""


class UnboundParam(BindError):
    pass


class DomainError(BindError):
    pass


class EtaOutOfRange(BindError):
    pass


class NormalizationError(BindError):
    pass


class BackendMismatch(FocklineError):
    """The selected backend cannot represent the circuit's sources."""


class DimensionCap(FocklineError):
    """The truncated Fock space is larger than the configured cap."""

    def __init__(self, dimension: int, cap: int, suggested_n_max: int):
        self.dimension = dimension
        self.cap = cap
        self.suggested_n_max = suggested_n_max
        super().__init__(
            f"Fock dimension {dimension} exceeds cap {cap}; "
            f"try --truncation {suggested_n_max} or raise FOCKLINE_DIM_CAP"
        )


class TruncationMismatch(FocklineError):
    """Engine and oracle states are not over compatible Fock spaces."""
