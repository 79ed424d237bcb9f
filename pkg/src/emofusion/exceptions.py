"""Exception hierarchy shared by every module in the package.

Everything derives from EmofusionError so callers can catch one base type.
Subclasses also inherit the matching builtin (ValueError, RuntimeError, ...)
so generic numpy/sklearn-style handling keeps working.
"""

from __future__ import annotations


class EmofusionError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EmofusionError, ValueError):
    """Invalid configuration value or unknown configuration key."""


class ShapeError(EmofusionError, ValueError):
    """Array argument has the wrong rank or incompatible dimensions."""


class PreconditionError(EmofusionError, ValueError):
    """Structurally valid input that violates an operation precondition."""


class EmptySequenceError(EmofusionError, ValueError):
    """An operation that needs at least one element received none."""


class NumericError(EmofusionError, ArithmeticError):
    """NaN or infinity appeared where a finite value is required."""


class FormatError(EmofusionError, ValueError):
    """A file or record does not match the expected on-disk format."""


class CoverageError(EmofusionError, KeyError):
    """A required record (score block, feature file) is missing for an id."""

    def __str__(self) -> str:  # KeyError quotes its message; keep it plain
        return self.args[0] if self.args else ""


class DegenerateDataError(EmofusionError, ValueError):
    """Data too degenerate to proceed (empty class, single class, ...)."""


class UndefinedMetricError(EmofusionError, ValueError):
    """A metric is undefined for the given inputs (e.g. empty class row)."""
