"""Exception types shared across the package."""


class DatekitError(Exception):
    """Base class for all datekit errors."""


class NotPositiveDefinite(DatekitError):
    """A matrix required to be SPD failed its Cholesky factorization."""

    def __init__(self, pivot_index=None, message=None):
        self.pivot_index = pivot_index
        if message is None:
            if pivot_index is None:
                message = "matrix is not positive definite"
            else:
                message = f"matrix is not positive definite (pivot {pivot_index})"
        super().__init__(message)


class DimensionMismatch(DatekitError, ValueError):
    """Array shapes are inconsistent with each other."""


class InvalidBand(DatekitError, ValueError):
    """Banding width outside the admissible range for the data."""


class SampleOrder(DatekitError, ValueError):
    """Two-sample reduction requires the first group to be the smaller one."""


class NoExceedances(DatekitError):
    """No statistic exceeded the tuning cutoff; sparsity is not estimable."""


class InvalidDomain(DatekitError, ValueError):
    """Parameter outside the domain of a closed-form expression."""
