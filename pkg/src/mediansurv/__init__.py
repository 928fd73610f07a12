"""Meta-analysis of median survival times from reported Kaplan-Meier
medians and confidence intervals, with a deterministic simulation lab."""

__version__ = "0.1.0"

from .distributions import Exponential, Uniform, Weibull, WeibullMixture, skewness_coefficients
from .intervals import MedianCI, bc_interval, bootstrap_percentile_ci
from .meta import MetaResult, derived_stats, pool_common, pool_random, q_profile_ci, reml_tau2
from .outcomes import StudyOutcome, difference_outcome, median_outcome, ratio_outcome
from .quantiles import chi2_quantile, normal_quantile, t_quantile
from .survival import (
    EventRecord,
    SurvivalCurve,
    Transform,
    greenwood_variance_at,
    km_fit,
    km_quantile,
    survival_at,
    survival_ci_at,
)
from .wald import MedianSummary, asymmetry_factor, recover_se, wald_se, wald_se_one_sided

__all__ = [
    "EventRecord", "SurvivalCurve", "Transform", "km_fit", "survival_at",
    "greenwood_variance_at", "km_quantile", "survival_ci_at",
    "MedianCI", "bc_interval", "bootstrap_percentile_ci",
    "MedianSummary", "wald_se", "wald_se_one_sided", "recover_se", "asymmetry_factor",
    "StudyOutcome", "median_outcome", "difference_outcome", "ratio_outcome",
    "MetaResult", "pool_common", "pool_random", "reml_tau2", "q_profile_ci", "derived_stats",
    "Exponential", "Weibull", "WeibullMixture", "Uniform", "skewness_coefficients",
    "normal_quantile", "t_quantile", "chi2_quantile",
    "__version__",
]


def nsclc_os_path():
    """Path to the bundled NSCLC overall-survival study-summary CSV."""
    from importlib import resources

    return resources.files(__name__).joinpath("data/nsclc_os.csv")
