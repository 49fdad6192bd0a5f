"""Exception types shared across the package."""


class DivergenceError(ArithmeticError):
    """An integral or moment that should be finite diverges."""


class PaddingError(ValueError):
    """An infimum over a finite node set was attained at the edge of the set.

    The true infimum may lie outside the sampled hull, so the value cannot be
    trusted.
    """


class BracketError(ValueError):
    """A supremum could not be bracketed by the supplied grid."""
