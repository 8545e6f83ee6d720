"""Error types shared across the package.

Invalid arguments raise plain ValueError; these classes cover failures
that happen after validation.
"""


class NumericalFailure(RuntimeError):
    """An iterative numerical procedure failed to converge or produced garbage."""


class FitFailure(RuntimeError):
    """Nonlinear least squares could not produce a usable parameter set."""
