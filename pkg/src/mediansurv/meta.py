"""Inverse-variance meta-analysis engine.

Common-effect and random-effects pooling with REML between-study variance,
Hartung-Knapp confidence intervals, Q-profile intervals for tau^2, the I^2
index and prediction intervals.
"""

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyMetaError,
    InsufficientStudiesError,
    NonConvergenceError,
    ZeroVarianceError,
)
from .quantiles import chi2_quantile, t_quantile

COMMON = "common"
RANDOM = "random"

_REML_MAX_ITER = 200
_REML_RTOL = 1e-10


@dataclass(frozen=True)
class MetaResult:
    pooled: float
    pooled_se: float
    pooled_ci: tuple | None
    tau2: float
    tau2_ci: tuple | None
    q_statistic: float
    i2_percent: float
    prediction_interval: tuple | None
    model: str
    k_studies: int
    scale: str
    alpha: float
    flags: tuple = ()


def _extract(outcomes):
    if not outcomes:
        raise EmptyMetaError("no studies to pool")
    y = np.array([o.estimate for o in outcomes], dtype=float)
    s = np.array([o.se for o in outcomes], dtype=float)
    if np.any(s == 0.0):
        raise ZeroVarianceError("a study with SE = 0 cannot be inverse-variance weighted")
    scales = {o.scale for o in outcomes}
    if len(scales) > 1:
        raise ValueError(f"outcomes mix analysis scales: {sorted(scales)}")
    return y, s, scales.pop()


def _cochran_q(y, v):
    w = 1.0 / v
    mu = np.sum(w * y) / np.sum(w)
    return float(np.sum(w * (y - mu) ** 2))


def _i2_percent(v, tau2):
    """I^2 from tau^2 and the typical sampling variance of the studies."""
    k = len(v)
    if k < 2:
        return 0.0
    w = 1.0 / v
    typical = (k - 1) * np.sum(w) / (np.sum(w) ** 2 - np.sum(w**2))
    return float(100.0 * tau2 / (tau2 + typical))


def _restricted_loglik(tau2, y, v):
    w = 1.0 / (v + tau2)
    mu = np.sum(w * y) / np.sum(w)
    return -0.5 * (
        np.sum(np.log(v + tau2)) + math.log(np.sum(w)) + np.sum(w * (y - mu) ** 2)
    )


def _reml_arrays(y, v):
    """Fisher-scoring REML iteration with nonnegativity truncation."""
    k = len(y)
    w = 1.0 / v
    mu = np.sum(w * y) / np.sum(w)
    q = np.sum(w * (y - mu) ** 2)
    c = np.sum(w) - np.sum(w**2) / np.sum(w)
    tau2 = max(0.0, (q - (k - 1)) / c) if c > 0 else 0.0

    ll = _restricted_loglik(tau2, y, v)
    for _ in range(_REML_MAX_ITER):
        w = 1.0 / (v + tau2)
        sw, sw2, sw3 = np.sum(w), np.sum(w**2), np.sum(w**3)
        mu = np.sum(w * y) / sw
        resid2 = (y - mu) ** 2
        score = -0.5 * (sw - sw2 / sw - np.sum(w**2 * resid2))
        info = 0.5 * (sw2 - 2.0 * sw3 / sw + (sw2 / sw) ** 2)
        step = score / info
        new = max(0.0, tau2 + step)
        new_ll = _restricted_loglik(new, y, v)
        halvings = 0
        while new_ll < ll and halvings < 30 and abs(new - tau2) > _REML_RTOL * (1 + tau2):
            step *= 0.5
            new = max(0.0, tau2 + step)
            new_ll = _restricted_loglik(new, y, v)
            halvings += 1
        converged = abs(new - tau2) < _REML_RTOL * (1.0 + new)
        tau2, ll = new, new_ll
        if converged:
            return tau2
    raise NonConvergenceError(
        f"REML did not converge within {_REML_MAX_ITER} iterations", last=tau2
    )


def reml_tau2(outcomes):
    """REML estimate of the between-study variance (needs >= 2 studies)."""
    y, s, _ = _extract(outcomes)
    if len(y) < 2:
        raise InsufficientStudiesError("REML needs at least 2 studies")
    return float(_reml_arrays(y, s**2))


def pool_common(outcomes, alpha=0.05):
    """Common-effect inverse-variance pooling with a t-interval.

    With a single study the t critical value has 0 degrees of freedom; the
    study is returned as-is with an absent CI and a ``degenerate-df`` flag.
    """
    y, s, scale = _extract(outcomes)
    k = len(y)
    v = s**2
    w = 1.0 / v
    mu = float(np.sum(w * y) / np.sum(w))
    se = float(math.sqrt(1.0 / np.sum(w)))
    flags = ()
    if k == 1:
        ci = None
        flags = ("degenerate-df",)
    else:
        half = t_quantile(1.0 - alpha / 2.0, k - 1) * se
        ci = (mu - half, mu + half)
    return MetaResult(
        pooled=mu,
        pooled_se=se,
        pooled_ci=ci,
        tau2=0.0,
        tau2_ci=None,
        q_statistic=_cochran_q(y, v) if k > 1 else 0.0,
        i2_percent=0.0,
        prediction_interval=None,
        model=COMMON,
        k_studies=k,
        scale=scale,
        alpha=alpha,
        flags=flags,
    )


def pool_random(outcomes, alpha=0.05):
    """Random-effects pooling: REML tau^2, Hartung-Knapp interval, Q-profile
    tau^2 interval, and Cochran's Q at fixed-effect weights."""
    y, s, scale = _extract(outcomes)
    k = len(y)
    if k < 2:
        raise InsufficientStudiesError("random-effects pooling needs at least 2 studies")
    v = s**2
    tau2 = float(_reml_arrays(y, v))
    w = 1.0 / (v + tau2)
    mu = float(np.sum(w * y) / np.sum(w))
    hk_var = float(np.sum(w * (y - mu) ** 2) / ((k - 1) * np.sum(w)))
    se = math.sqrt(hk_var)
    flags = ()
    if se == 0.0:
        flags = ("degenerate-hk",)
    half = t_quantile(1.0 - alpha / 2.0, k - 1) * se
    return MetaResult(
        pooled=mu,
        pooled_se=se,
        pooled_ci=(mu - half, mu + half),
        tau2=tau2,
        tau2_ci=q_profile_ci(outcomes, alpha),
        q_statistic=_cochran_q(y, v),
        i2_percent=_i2_percent(v, tau2),
        prediction_interval=None,
        model=RANDOM,
        k_studies=k,
        scale=scale,
        alpha=alpha,
        flags=flags,
    )


def _generalized_q(tau2, y, v):
    w = 1.0 / (v + tau2)
    mu = np.sum(w * y) / np.sum(w)
    return float(np.sum(w * (y - mu) ** 2))


def _q_profile_root(target, y, v):
    """Solve Q_gen(tau2) = target for the monotone-decreasing Q_gen."""
    if _generalized_q(0.0, y, v) <= target:
        return 0.0
    hi = 1.0
    for _ in range(300):
        if _generalized_q(hi, y, v) < target:
            break
        hi *= 4.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _generalized_q(mid, y, v) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * (1.0 + hi):
            break
    return 0.5 * (lo + hi)


def q_profile_ci(outcomes, alpha=0.05):
    """Q-profile confidence interval for the between-study variance."""
    y, s, _ = _extract(outcomes)
    k = len(y)
    if k < 2:
        raise InsufficientStudiesError("the Q-profile interval needs at least 2 studies")
    v = s**2
    lower = _q_profile_root(chi2_quantile(1.0 - alpha / 2.0, k - 1), y, v)
    upper = _q_profile_root(chi2_quantile(alpha / 2.0, k - 1), y, v)
    return (lower, upper)


def derived_stats(outcomes, meta, alpha=0.05):
    """Augment a pooled result with I^2 and the prediction interval.

    The prediction interval is pooled +- t_{k-2} * sqrt(tau^2 + SE^2) and
    needs at least 3 studies; with fewer it stays absent and an
    ``insufficient-studies`` flag is recorded.  For log-scale outcomes the
    reporting layer exponentiates the pooled value, CI and PI.
    """
    y, s, _ = _extract(outcomes)
    i2 = _i2_percent(s**2, meta.tau2)
    k = meta.k_studies
    if k < 3:
        return dataclasses.replace(
            meta,
            i2_percent=i2,
            prediction_interval=None,
            flags=meta.flags + ("insufficient-studies",),
        )
    half = t_quantile(1.0 - alpha / 2.0, k - 2) * math.sqrt(meta.tau2 + meta.pooled_se**2)
    return dataclasses.replace(
        meta,
        i2_percent=i2,
        prediction_interval=(meta.pooled - half, meta.pooled + half),
    )
