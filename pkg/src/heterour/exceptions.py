"""Exception hierarchy.

Every error raised for a bad input or a degenerate statistical situation
derives from :class:`HeterourError`, so the CLI can map the whole family to
one exit code.
"""

__all__ = [
    "HeterourError",
    "InsufficientLength",
    "NonFiniteValues",
    "AllLagsZero",
    "SingularDesign",
    "DegenerateResiduals",
    "ZeroBandwidth",
    "DegenerateLaggedVector",
    "LengthMismatch",
    "IndexOutOfPool",
    "InvalidSubsampleLength",
    "NearUnitDenominator",
]


class HeterourError(ValueError):
    """Base class for precondition failures."""


class InsufficientLength(HeterourError):
    pass


class NonFiniteValues(HeterourError):
    pass


class AllLagsZero(HeterourError):
    """Every lagged regressor is zero; the LAD objective is flat in gamma."""


class SingularDesign(HeterourError):
    pass


class DegenerateResiduals(HeterourError):
    """All absolute residuals are zero, so no volatility path can be formed."""


class ZeroBandwidth(HeterourError):
    pass


class DegenerateLaggedVector(UserWarning):
    """Warning: the lagged regressor is constant, so the t-ratio is zero."""


class LengthMismatch(HeterourError):
    pass


class IndexOutOfPool(HeterourError):
    pass


class InvalidSubsampleLength(HeterourError):
    pass


class NearUnitDenominator(HeterourError):
    pass
