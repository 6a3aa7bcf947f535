"""Exception types shared across the package."""


class UnsupportedRegimeError(ValueError):
    """Raised when an operation requires a supercritical / transient regime it was not given."""


class DivergentMomentError(ValueError):
    """Raised when a requested Dirichlet moment does not exist (some alpha_j + s_j <= 0)."""


class InvalidPathError(ValueError):
    """Raised when a vertex sequence is not a path on the given graph."""


class InsufficientDataError(RuntimeError):
    """Raised when an estimator does not have enough samples to report a value."""


class UnstableRatioError(RuntimeError):
    """Raised when a ratio estimator's denominator is statistically indistinguishable from zero."""


class VertexCapError(RuntimeError):
    """Raised when tree growth would exceed the configured vertex cap."""
