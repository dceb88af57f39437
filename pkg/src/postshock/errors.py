"""Exception hierarchy.

Input problems derive from :class:`InputError` (CLI exit code 2), numerical
failures from :class:`NumericalError` (CLI exit code 3).
"""


class PostShockError(Exception):
    """Base class for every error raised by this package."""


class InputError(PostShockError, ValueError):
    """Malformed or inconsistent user input."""


class PanelParseError(InputError):
    """A panel CSV file could not be turned into a valid donor pool."""


class NumericalError(PostShockError, ArithmeticError):
    """A computation could not produce a trustworthy number."""


class SingularDesignError(NumericalError):
    def __init__(self, series_id, rcond):
        self.series_id = series_id
        self.rcond = rcond
        super().__init__(
            f"design matrix for series {series_id!r} is singular or "
            f"near-singular (reciprocal condition {rcond:.3g})"
        )


class DegenerateVarianceError(NumericalError):
    """An inverse-variance weight would be infinite."""


class DegenerateResidualsError(NumericalError):
    """A donor's residuals carry no spread to resample."""


class StandardizationError(NumericalError):
    """A covariate has zero spread and cannot be scaled."""


class BootstrapFailure(NumericalError):
    """Singular replicate refits persisted past the retry cap."""
