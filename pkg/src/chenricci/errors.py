"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ChenRicciError(Exception):
    """Base class for all errors raised by the package."""


# --- expression language -------------------------------------------------


class ExprError(ChenRicciError):
    pass


class ParseError(ExprError):
    """Syntax error. ``offset`` is a byte offset into the UTF-8 source."""

    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset()):
        self.offset = offset
        self.expected = expected
        detail = f" (expected one of: {', '.join(sorted(expected))})" if expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class UnknownFunctionError(ParseError):
    pass


class UnboundVariableError(ExprError):
    pass


class DomainError(ExprError):
    """Evaluation left the domain of an operation (log of 0, x/0, overflow...)."""


# --- geometry ------------------------------------------------------------


class GeometryError(ChenRicciError):
    pass


class MetricError(GeometryError):
    def __init__(self, message: str, min_eigenvalue: float | None = None):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(message)


class OutsideDomainError(GeometryError):
    pass


class RankError(GeometryError):
    def __init__(self, message: str, singular_values=None):
        self.singular_values = singular_values
        super().__init__(message)


class FrameError(GeometryError):
    pass


class ConvergenceError(GeometryError):
    pass


class ContractError(GeometryError):
    """A scenario violated a defining property (isometry, Kähler compatibility...)."""


class SpaceFormError(GeometryError):
    pass


class UnavailableError(GeometryError):
    """A quantity cannot be computed independently for this scenario."""


# --- scenarios / driver --------------------------------------------------


class ScenarioError(ChenRicciError):
    pass


class ConfigError(ChenRicciError):
    pass
