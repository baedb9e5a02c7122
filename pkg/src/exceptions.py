"""
Exceptions
Error hierarchy shared by the simulator, the logic engine and the front ends.
"""

from typing import Optional


class FlpeError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(FlpeError, ValueError):
    """Invalid system, adversary or scenario configuration."""


class TopologyError(FlpeError, ValueError):
    """Unknown process or malformed topology."""


class SchedulerContractError(FlpeError, RuntimeError):
    """A disabled event was applied. Indicates a harness bug, never user error."""


class ResourceCapError(FlpeError, RuntimeError):
    """A configured resource cap (visited states, closure size) was exceeded."""


class PreconditionError(FlpeError):
    """An operation's precondition does not hold (e.g. no baseline transition)."""


class TraceFormatError(FlpeError, ValueError):
    """A trace file could not be read or does not replay."""


class UnsupportedFormulaError(FlpeError, ValueError):
    """Formula uses a connective the chosen procedure does not support."""


class FormulaSyntaxError(FlpeError, ValueError):
    """
    Formula text does not match the grammar.

    Args:
        message: Human readable description
        position: 0-based offset into the source text
    """

    def __init__(self, message: str, position: Optional[int] = None):
        self.message = message
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
