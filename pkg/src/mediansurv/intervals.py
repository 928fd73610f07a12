"""Confidence intervals for survival quantiles.

Two families: test inversion on the event-time grid (Brookmeyer-Crowley,
with identity / log / log-minus-log transforms) and the percentile
nonparametric bootstrap.  Both return :class:`MedianCI`; ``None`` limits mean
unbounded.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NoEventsError, UpperUnstableError
from .quantiles import normal_quantile
from .rng import substream
from .survival import Transform, _coerce_arrays, km_quantile

_BOOT_CHUNK = 2048


@dataclass(frozen=True)
class MedianCI:
    """Confidence interval for a survival quantile; None limits are unbounded."""

    lower: float | None
    upper: float | None
    level: float
    method: str
    transform: Transform | None = None
    replicates: int | None = None


def _bc_statistic(curve, p, transform):
    """Test statistic at every event time; NaN where not computable.

    The statistic is |g(S) - g(1-p)| / (|g'(S)| * se(S)).  Grid points with
    S = 0 have an undefined Greenwood variance (some n_i == d_i) and, for the
    log scales, an undefined transform, so they are not computable; they count
    as definitive far-side exits instead.
    """
    s = curve.survival
    target = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        se = np.sqrt(curve.greenwood_cumsum) * s
        computable = np.isfinite(curve.greenwood_cumsum) & (s > 0.0)
        if transform is Transform.IDENTITY:
            num = np.abs(s - target)
            den = se
        elif transform is Transform.LOG:
            num = np.abs(np.log(s) - np.log(target))
            den = se / s
        else:
            num = np.abs(np.log(-np.log(s)) - np.log(-np.log(target)))
            den = se / (s * np.abs(np.log(s)))
        stat = np.where(computable, num / den, np.nan)
    return stat, computable


def bc_interval(curve, p, alpha, transform=Transform.LOGLOG):
    """Test-inversion confidence interval for the p-th survival quantile.

    The acceptance set is scanned on the event-time grid (the estimate is
    constant between event times).  The lower limit is the smallest accepted
    event time; the upper limit is the first event time after the acceptance
    set ends, or unbounded when the set runs to the end of follow-up.  When no
    grid point is accepted (degenerate curves) the interval anchors at the
    quantile estimate so that it always contains the point estimate.
    """
    transform = Transform(transform)
    r = curve.n_event_times
    if r == 0:
        raise NoEventsError("curve has no events")
    z = normal_quantile(1.0 - alpha / 2.0)
    stat, computable = _bc_statistic(curve, p, transform)
    accepted = computable & (stat <= z)

    if accepted.any():
        idx = np.flatnonzero(accepted)
        first, last = int(idx[0]), int(idx[-1])
    else:
        m = km_quantile(curve, p)
        if m is None:
            return MedianCI(None, None, 1.0 - alpha, "brookmeyer-crowley", transform)
        first = last = int(np.searchsorted(curve.event_times, m))
    lower = float(curve.event_times[first])
    upper = float(curve.event_times[last + 1]) if last + 1 < r else None
    return MedianCI(lower, upper, 1.0 - alpha, "brookmeyer-crowley", transform)


def bootstrap_medians(times, events, p, replicates, seed):
    """Quantile estimates over n-out-of-n resamples; +inf where undefined.

    Replicate b draws its resample indices from the independent stream
    (seed, b), so the result is invariant to evaluation order.  The base
    sample is pre-sorted with events before censorings at tied times; sorted
    index matrices then reproduce the product-limit tie convention exactly.
    """
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    n = times.size
    order = np.lexsort((~events, times))
    t_sorted = times[order]
    e_sorted = events[order].astype(float)
    target = 1.0 - p
    at_risk = (n - np.arange(n)).astype(float)

    meds = np.empty(replicates)
    for start in range(0, replicates, _BOOT_CHUNK):
        stop = min(start + _BOOT_CHUNK, replicates)
        idx = np.empty((stop - start, n), dtype=np.intp)
        for b in range(start, stop):
            idx[b - start] = substream(seed, b).integers(0, n, size=n)
        idx.sort(axis=1)
        surv = np.cumprod(1.0 - e_sorted[idx] / at_risk, axis=1)
        reached = surv <= target
        has = reached.any(axis=1)
        pos = np.argmax(reached, axis=1)
        block = t_sorted[idx[np.arange(stop - start), pos]]
        meds[start:stop] = np.where(has, block, np.inf)
    return meds


def _type1_quantile(sorted_values, q):
    """Inverse-ECDF (type-1) empirical quantile of a pre-sorted array."""
    k = max(1, int(np.ceil(len(sorted_values) * q)))
    return sorted_values[k - 1]


def bootstrap_percentile_ci(records, p, alpha, replicates, seed):
    """Percentile bootstrap interval for the p-th survival quantile.

    Resamples with replacement, computes the product-limit quantile per
    replicate (undefined quantiles count as +inf so they keep their rank),
    and returns the type-1 empirical alpha/2 and 1-alpha/2 quantiles of the
    replicate values.  Deterministic given (records, replicates, seed).
    """
    times, events = _coerce_arrays(records)
    return bootstrap_percentile_ci_arrays(times, events, p, alpha, replicates, seed)


def bootstrap_percentile_ci_arrays(times, events, p, alpha, replicates, seed):
    """Array fast path of :func:`bootstrap_percentile_ci`."""
    if replicates < 2:
        raise ValueError(f"need at least 2 bootstrap replicates, got {replicates!r}")
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    if times.size == 0:
        raise NoEventsError("no observations supplied")
    if not events.any():
        raise NoEventsError("no replicate can contain an event: all observations censored")

    meds = np.sort(bootstrap_medians(times, events, p, replicates, seed))
    lower = _type1_quantile(meds, alpha / 2.0)
    upper = _type1_quantile(meds, 1.0 - alpha / 2.0)
    if not np.isfinite(upper):
        raise UpperUnstableError(
            "upper bootstrap percentile is +inf: too many replicates with undefined medians"
        )
    return MedianCI(
        float(lower), float(upper), 1.0 - alpha, "bootstrap-percentile", None, replicates
    )
