"""Exception hierarchy.

Every error raised on purpose by xosc derives from :class:`XoscError`, which is
itself a :class:`ValueError`, so ``except ValueError`` keeps working for callers.
"""

from __future__ import annotations

from typing import Any


class XoscError(ValueError):
    """Base class of all xosc errors."""


class InputError(XoscError):
    """Arguments violate the documented preconditions."""


class DegenerateInputError(InputError):
    """Input is well-formed but too small or too flat to analyse."""


class InvalidFrequencyError(InputError):
    """A frequency lies outside ``(0, Nyquist)``."""


class InsufficientDataError(InputError):
    """Fewer samples than a single analysis segment."""


class ConfigError(InputError):
    """A configuration value is out of range or unknown."""


class NoPeakError(XoscError):
    """The spectrum has no usable peak inside the search band."""


class NoModeError(XoscError):
    """Ring-down data carry no identifiable oscillatory mode."""


class NoMatchingModeError(XoscError):
    """No identified mode lies within tolerance of the target frequency.

    The closest candidate is kept in :attr:`nearest` for diagnostics.
    """

    def __init__(self, message: str, nearest: Any = None):
        super().__init__(message)
        self.nearest = nearest


class DegenerateWeightsError(XoscError):
    """All triangulation weights are zero."""


class ModelError(XoscError):
    """A grid model breaks its structural invariants."""


class ParseError(InputError):
    """A file could not be parsed. :attr:`line` is 1-based, if known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class PipelineError(XoscError):
    """A stage of :func:`xosc.locate_source` failed.

    The original exception is chained as ``__cause__``.
    """

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
