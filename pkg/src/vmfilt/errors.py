"""Exception taxonomy shared across the package.

Everything numerical that can go wrong derives from FilterError so callers
(and the CLI) can distinguish "bad request" from "the numbers broke".
"""


class FilterError(Exception):
    """Base class for numerical/design failures."""


class EvalError(FilterError):
    """Transfer-function evaluation at (or too near) a pole."""


class SplitError(FilterError):
    """Denominator cannot be split into forward/backward factors.

    Raised for roots within tolerance of the unit circle (marginal
    stability) and for root multisets not closed under z -> 1/z.
    """


class DecompositionError(FilterError):
    """Three-part numerator system is singular or inconsistent."""


class DesignError(FilterError):
    """Constraint system for a filter design is unsolvable/ill-conditioned."""


class StabilityError(FilterError):
    """A recursion was asked to run with poles on or outside the unit circle."""


class TruncationError(FilterError):
    """FIR truncation discards too much of the underlying response."""
