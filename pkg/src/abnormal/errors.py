"""Shared exception types."""


class BudgetError(Exception):
    """An integer or digit string would exceed the materialization budget."""


class PrecisionError(Exception):
    """A certified comparison or enclosure could not be resolved at the
    precision cap.  Never raised when a verdict was merely close; raised
    only instead of guessing."""


class LevelError(Exception):
    """A quantity is too large for the requested representation level
    (exact value, logarithm, or iterated logarithm)."""
