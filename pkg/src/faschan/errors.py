"""Error types shared across the package.

Precondition and domain violations raise plain ``ValueError``; the classes
below mark failures that only surface once a computation is underway.
"""


class FitError(RuntimeError):
    """Correlation-matching fit could not be completed (e.g. singular normal equations)."""


class UnstableModelError(RuntimeError):
    """An operation requiring a stable autoregression was given an unstable one."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or produced non-finite intermediates."""
