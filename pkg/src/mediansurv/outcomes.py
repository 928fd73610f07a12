"""Study-level outcome measures on the analysis scale.

Converts per-arm median summaries into (estimate, SE) pairs for the three
supported outcomes: a single-group median, a difference of medians, and a
log ratio of medians.  Ratio analyses stay on the log scale until reporting.
"""

import math
from dataclasses import dataclass

from .errors import NonpositiveMedianError, ZeroSEError
from .wald import recover_se

NATURAL = "natural"
LOG = "log"


@dataclass(frozen=True)
class StudyOutcome:
    estimate: float
    se: float
    scale: str
    study_id: str = ""


def _arm_se(arm):
    se = recover_se(arm)
    if se == 0.0:
        raise ZeroSEError(f"recovered SE is 0 for estimate {arm.estimate!r}")
    return se


def median_outcome(arm, study_id=""):
    """Single-group median with its recovered standard error."""
    return StudyOutcome(arm.estimate, _arm_se(arm), NATURAL, study_id)


def difference_outcome(arm1, arm2, study_id=""):
    """Difference of medians; SEs add in quadrature (independent groups)."""
    se1, se2 = _arm_se(arm1), _arm_se(arm2)
    return StudyOutcome(
        arm1.estimate - arm2.estimate, math.hypot(se1, se2), NATURAL, study_id
    )


def ratio_outcome(arm1, arm2, study_id=""):
    """Log ratio of medians with the delta-method standard error."""
    if arm1.estimate <= 0 or arm2.estimate <= 0:
        raise NonpositiveMedianError("ratio outcomes need strictly positive medians")
    se1, se2 = _arm_se(arm1), _arm_se(arm2)
    se = math.sqrt((se1 / arm1.estimate) ** 2 + (se2 / arm2.estimate) ** 2)
    return StudyOutcome(math.log(arm1.estimate / arm2.estimate), se, LOG, study_id)
