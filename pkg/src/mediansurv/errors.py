"""Exception and warning types raised across the package."""


class MedianSurvError(Exception):
    """Base class for all errors raised by this package."""


class EmptyInputError(MedianSurvError):
    """No observations were supplied."""


class InvalidTimeError(MedianSurvError):
    """An observation time is negative or non-finite."""


class BoundaryValueError(MedianSurvError):
    """A transform requires 0 < S < 1 but S is 0 or 1."""


class UndefinedVarianceError(MedianSurvError):
    """The Greenwood variance is undefined at the requested time."""


class NoEventsError(MedianSurvError):
    """The data contain no events, so the requested quantity does not exist."""


class UpperUnstableError(MedianSurvError):
    """The upper bootstrap percentile is +inf (too many undefined replicate medians)."""


class MissingLimitError(MedianSurvError):
    """A confidence limit needed for standard-error recovery is missing."""


class InvalidLevelError(MedianSurvError):
    """A confidence level is outside (0, 1)."""


class InvalidTailsError(MedianSurvError):
    """Tail probabilities must satisfy a1 > 0, a2 > 0 and a1 + a2 < 1."""


class ZeroSEError(MedianSurvError):
    """A recovered standard error of exactly 0 cannot be inverse-variance weighted."""


class NonpositiveMedianError(MedianSurvError):
    """Ratio outcomes require strictly positive medians."""


class ZeroVarianceError(MedianSurvError):
    """A study with zero variance cannot be pooled."""


class EmptyMetaError(MedianSurvError):
    """A meta-analysis needs at least one study."""


class InsufficientStudiesError(MedianSurvError):
    """Too few studies for the requested operation."""


class NonConvergenceError(MedianSurvError):
    """An iterative estimate failed to converge; carries the last iterate."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class UndefinedRateExceededError(MedianSurvError):
    """Too large a fraction of Monte-Carlo replicates had undefined medians."""


class ParseError(MedianSurvError):
    """An input file could not be parsed; message includes the line number."""


class InvariantViolationError(MedianSurvError):
    """A parsed row violates a structural invariant; message names the row."""


class ZeroWidthIntervalWarning(UserWarning):
    """A zero-width confidence interval produced a standard error of 0."""
