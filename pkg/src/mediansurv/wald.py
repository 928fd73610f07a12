"""Standard-error recovery from reported confidence intervals.

Treats a reported interval around a median estimate as a Wald interval:
SE = (upper - lower) / (2 z), with a one-sided fallback when only the lower
limit is available, and a diagnostic for intervals with asymmetric tail
probabilities.
"""

import math
import warnings
from dataclasses import dataclass

from .errors import (
    InvalidLevelError,
    InvalidTailsError,
    InvariantViolationError,
    MissingLimitError,
    ZeroWidthIntervalWarning,
)
from .quantiles import normal_quantile


@dataclass(frozen=True)
class MedianSummary:
    """A reported median estimate with confidence limits; None means missing."""

    estimate: float
    lower: float | None
    upper: float | None
    level: float = 0.95

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise InvalidLevelError(f"confidence level must be in (0, 1), got {self.level!r}")
        if not math.isfinite(self.estimate) or self.estimate <= 0:
            raise InvariantViolationError(f"median estimate must be positive, got {self.estimate!r}")
        if self.lower is not None and self.lower > self.estimate:
            raise InvariantViolationError(
                f"lower limit {self.lower!r} exceeds the estimate {self.estimate!r}"
            )
        if self.upper is not None and self.upper < self.estimate:
            raise InvariantViolationError(
                f"upper limit {self.upper!r} is below the estimate {self.estimate!r}"
            )


def _wald_from_limits(lower, upper, level):
    return (upper - lower) / (2.0 * normal_quantile(0.5 + level / 2.0))


def wald_se(summary):
    """SE recovered from a two-sided interval: (upper - lower) / (2 z).

    A zero-width interval yields SE = 0 with a ZeroWidthIntervalWarning so
    that downstream weighting can reject it with a clear diagnosis.
    """
    if summary.lower is None or summary.upper is None:
        raise MissingLimitError("two-sided recovery needs both limits; use wald_se_one_sided")
    se = _wald_from_limits(summary.lower, summary.upper, summary.level)
    if se == 0.0:
        warnings.warn("zero-width interval recovered SE = 0", ZeroWidthIntervalWarning)
    return se


def wald_se_one_sided(summary):
    """SE recovered from the lower limit alone: (estimate - lower) / z."""
    if summary.lower is None:
        raise MissingLimitError("one-sided recovery needs the lower limit")
    se = (summary.estimate - summary.lower) / normal_quantile(0.5 + summary.level / 2.0)
    if se == 0.0:
        warnings.warn("degenerate lower limit recovered SE = 0", ZeroWidthIntervalWarning)
    return se


def recover_se(summary):
    """Routing policy: two-sided when both limits exist, one-sided when only
    the lower exists, error otherwise."""
    if summary.lower is not None and summary.upper is not None:
        return wald_se(summary)
    if summary.lower is not None:
        return wald_se_one_sided(summary)
    raise MissingLimitError("no usable confidence limits reported")


def asymmetry_factor(alpha1, alpha2):
    """Effect of unequal tail probabilities on the recovery formula.

    Returns ``(factor, bias_ratio)`` where factor = 1 / (z_{1-a1} + z_{1-a2})
    is the exact width-to-SE conversion for tails (a1, a2), and bias_ratio =
    factor * 2 z_{1-(a1+a2)/2} compares it to the equal-tails formula;
    bias_ratio <= 1 with equality iff a1 == a2.
    """
    if alpha1 <= 0 or alpha2 <= 0 or alpha1 + alpha2 >= 1:
        raise InvalidTailsError(
            f"need a1 > 0, a2 > 0 and a1 + a2 < 1, got ({alpha1!r}, {alpha2!r})"
        )
    factor = 1.0 / (normal_quantile(1.0 - alpha1) + normal_quantile(1.0 - alpha2))
    bias_ratio = factor * 2.0 * normal_quantile(1.0 - (alpha1 + alpha2) / 2.0)
    return factor, bias_ratio
