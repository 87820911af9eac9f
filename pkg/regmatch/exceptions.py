"""Custom exceptions for regmatch."""

from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from regmatch.models import ValidationReport


class RegmatchError(Exception):
    """Base exception for all regmatch errors."""

    pass


class InvalidGraphError(RegmatchError):
    """Raised when a graph violates a regular bipartite invariant."""

    def __init__(
        self, message: str, report: Optional["ValidationReport"] = None
    ) -> None:
        super().__init__(message)
        self.report = report


class GraphFormatError(RegmatchError):
    """Raised when a graph, matching or matrix file cannot be parsed."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class VerificationError(RegmatchError):
    """Raised when an emitted matching or decomposition fails verification."""

    pass


class SamplerError(RegmatchError):
    """Raised on invalid use of a prefix weight index."""

    pass


class NotDoublyStochasticError(RegmatchError):
    """Raised when row and column sums do not share a common value."""

    pass


class SupportError(RegmatchError):
    """Raised when the support of a matrix admits no walk progress."""

    pass


class WalkCapExceededError(RegmatchError):
    """Raised when an untruncated run exceeds its global step cap."""

    pass


class AdversaryError(RegmatchError):
    """Raised when the probe game adversary breaks its own invariant."""

    pass


class ProberContractError(RegmatchError):
    """Raised when a prober queries a saturated or unknown vertex."""

    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"transcript position {position}: {message}")
        self.position = position


class BoundCheckError(RegmatchError):
    """Raised when a benchmark cell breaches its step bound."""

    pass
