from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .povm import SolveResult


class CqtError(Exception):
    """Base class for errors raised by cqt_certify."""


class InvalidStateError(CqtError, ValueError):
    """An operand violates the invariants an operation depends on."""


class SolverConvergenceError(CqtError):
    """The discrimination solver did not certify a gap within tolerance.

    The best result found so far is kept on the exception so that callers can
    still inspect or report it.
    """

    def __init__(self, message: str, best: "SolveResult | None" = None):
        super().__init__(message)
        self.best = best

    @property
    def gap(self) -> float:
        if self.best is None:
            return float("inf")
        return self.best.gap


class ConfigError(CqtError, ValueError):
    """A configuration file or option could not be used."""
