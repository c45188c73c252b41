"""Shared exception types for rmtdist.

Invalid arguments raise plain ValueError; the classes here mark failure
modes that callers may want to catch individually.
"""


class OutOfDomainError(ValueError):
    """An evaluation point lies outside the object's domain."""


class NoConvergenceError(RuntimeError):
    """An adaptive procedure exhausted its budget without converging."""


class NotACdfError(ValueError):
    """A function expected to be a CDF fails the range/monotonicity check."""


class BadBracketError(ValueError):
    """A bracketing interval does not straddle the requested root."""


class NumericalFailureError(RuntimeError):
    """A linear-algebra building block failed (singular factor, no eigenvalues)."""


class IllConditionedRadiusWarning(UserWarning):
    """A contour derivative suffered heavy cancellation; the radius is too small."""
