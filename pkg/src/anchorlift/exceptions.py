# -*- coding: utf-8 -*-

"""Exceptions raised by :mod:`anchorlift`."""

from typing import Optional

__all__ = [
    "AnchorLiftError",
    "OutOfInjectivityRadius",
    "SpecMismatch",
    "NonFiniteRHS",
    "NonFiniteOutput",
    "Blowup",
    "EndpointMismatch",
    "NotLinear",
    "NotMonotone",
    "NotALoop",
    "NotInvertible",
    "NoLogsAvailable",
    "DimensionMismatch",
    "ScenarioError",
]


class AnchorLiftError(ValueError):
    """Base class for errors raised by the package."""


class OutOfInjectivityRadius(AnchorLiftError):
    """Raised when a group element has no principal logarithm."""


class SpecMismatch(AnchorLiftError):
    """Raised when elements of different groups are combined."""


class NonFiniteRHS(AnchorLiftError):
    """Raised when the right-hand side of a group ODE is not finite."""


class NonFiniteOutput(AnchorLiftError):
    """Raised when an anchor map returns a non-finite vector."""


class Blowup(AnchorLiftError):
    """Raised when an integrated trajectory leaves the domain guard box."""


class EndpointMismatch(AnchorLiftError):
    """Raised when composed curves do not meet at a junction."""

    def __init__(self, index: int, gap: float):
        """Initialize the error.

        :param index: The index of the junction, counted from the first part
        :param gap: The norm of the gap between the base endpoints
        """
        super().__init__(f"parts {index} and {index + 1} do not meet (gap {gap:.3e})")
        self.index = index
        self.gap = gap


class NotLinear(AnchorLiftError):
    """Raised when an operation needs a linear anchored bundle."""


class NotMonotone(AnchorLiftError):
    """Raised when a reparameterization is not strictly increasing."""


class NotALoop(AnchorLiftError):
    """Raised when a control does not bring the base back to its start."""

    def __init__(self, gap: float):
        """Initialize the error.

        :param gap: The norm of the gap between the start and end of the base curve
        """
        super().__init__(f"base curve does not close (gap {gap:.3e})")
        self.gap = gap


class NotInvertible(AnchorLiftError):
    """Raised when a bundle morphism can not be inverted on its fibers."""


class NoLogsAvailable(AnchorLiftError):
    """Raised when a holonomy sample has no element with a logarithm."""


class DimensionMismatch(AnchorLiftError):
    """Raised when the dimensions of a loop family and a bundle disagree."""


class ScenarioError(AnchorLiftError):
    """Raised when a scenario file can not be parsed or validated."""

    def __init__(self, message: str, line: Optional[int] = None):
        """Initialize the error.

        :param message: The diagnostic
        :param line: The line of the scenario file the diagnostic refers to, if known
        """
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
