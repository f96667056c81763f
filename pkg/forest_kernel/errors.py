"""
Exception hierarchy for forest_kernel.

Every error raised on purpose by the library derives from ForestKernelError,
so callers (and the CLI) can tell a domain failure from a programming bug.
"""

from typing import Any, Optional, Tuple


class ForestKernelError(Exception):
    """Base class for all library errors."""


class ConfigurationError(ForestKernelError):
    """A Configuration violates its invariants."""


class InvalidReferenceError(ForestKernelError):
    """A parent map references a label outside the configuration."""

    def __init__(self, label: Any, message: Optional[str] = None):
        self.label = label
        super().__init__(message or f"Unknown label referenced by parent map: {label!r}")


class PreconditionError(ForestKernelError):
    """An operation was called outside its domain."""


class KernelDomainError(ForestKernelError):
    """The edge kernel cannot be evaluated on a pair of points."""

    def __init__(self, pair: Tuple[Any, Any], message: Optional[str] = None):
        self.pair = pair
        super().__init__(message or f"Kernel undefined on pair {pair[0]!r}-{pair[1]!r}")


class SizeLimitError(ForestKernelError):
    """The requested problem exceeds the configured point limit."""

    def __init__(self, requested: int, limit: int, what: str = "points"):
        self.requested = requested
        self.limit = limit
        super().__init__(
            f"Requested {requested} {what} exceeds the limit of {limit} "
            f"(set FOREST_KERNEL_MAX_POINTS to override)"
        )


class ModeError(ForestKernelError):
    """A float value reached an exact-mode computation."""


class MemoConsistencyError(ForestKernelError):
    """A memo entry disagrees with its re-derivation (debug mode only)."""


class ConfigFileError(ForestKernelError):
    """A configuration file could not be parsed or validated."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(f"{message}{location}")
