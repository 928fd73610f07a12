"""Kaplan-Meier product-limit estimation from right-censored data.

Fits the step-function survival estimate with Greenwood variances and
provides pointwise transformed confidence limits and quantile estimates.
Censored observations tied with events at the same time are counted as at
risk for that event (censoring ordered after events).
"""

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np

from .errors import (
    BoundaryValueError,
    EmptyInputError,
    InvalidTimeError,
    UndefinedVarianceError,
)
from .quantiles import normal_quantile


class Transform(str, Enum):
    """Scale on which pointwise survival confidence limits are computed."""

    IDENTITY = "identity"
    LOG = "log"
    LOGLOG = "loglog"


@dataclass(frozen=True)
class EventRecord:
    """One right-censored observation: min(event time, censoring time)."""

    time: float
    event: bool

    def __post_init__(self):
        if not math.isfinite(self.time) or self.time < 0:
            raise InvalidTimeError(f"observation time must be finite and >= 0, got {self.time!r}")


@dataclass(frozen=True)
class SurvivalCurve:
    """Fitted product-limit curve on the event-time grid.

    ``greenwood_cumsum`` holds the running sum d_i / (n_i (n_i - d_i)); it is
    NaN from the first event time with n_i == d_i onward, where the Greenwood
    variance is undefined.
    """

    event_times: np.ndarray
    deaths: np.ndarray
    at_risk: np.ndarray
    survival: np.ndarray
    greenwood_cumsum: np.ndarray
    sample_size: int

    @property
    def n_event_times(self):
        return len(self.event_times)


def _coerce_arrays(records):
    times, events = [], []
    for rec in records:
        if isinstance(rec, EventRecord):
            times.append(rec.time)
            events.append(rec.event)
        else:
            t, e = rec
            times.append(float(t))
            events.append(bool(e))
    return np.asarray(times, dtype=float), np.asarray(events, dtype=bool)


def km_fit(records):
    """Fit the Kaplan-Meier estimator.

    Parameters
    ----------
    records : iterable of EventRecord or (time, status) pairs
        Right-censored observations; status is truthy for an event.

    Returns
    -------
    SurvivalCurve
    """
    times, events = _coerce_arrays(records)
    return km_fit_arrays(times, events)


def km_fit_arrays(times, events):
    """Array fast path of :func:`km_fit`; ``events`` is a boolean mask."""
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    if times.size == 0:
        raise EmptyInputError("no observations supplied")
    if not np.all(np.isfinite(times)) or np.any(times < 0):
        raise InvalidTimeError("observation times must be finite and >= 0")

    n = times.size
    order = np.argsort(times, kind="stable")
    ts = times[order]
    es = events[order]

    uniq, start = np.unique(ts, return_index=True)
    cum_events = np.concatenate(([0], np.cumsum(es)))
    stop = np.concatenate((start[1:], [n]))
    deaths_at = cum_events[stop] - cum_events[start]
    at_risk_at = n - start

    has_event = deaths_at > 0
    t_i = uniq[has_event]
    d_i = deaths_at[has_event]
    n_i = at_risk_at[has_event]

    survival = np.cumprod(1.0 - d_i / n_i)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(n_i > d_i, d_i / (n_i * (n_i - d_i)), np.nan)
    greenwood = np.cumsum(terms)

    return SurvivalCurve(
        event_times=t_i,
        deaths=d_i.astype(int),
        at_risk=n_i.astype(int),
        survival=survival,
        greenwood_cumsum=greenwood,
        sample_size=int(n),
    )


def _step_index(curve, t):
    """Index of the largest event time <= t, or -1 if t precedes all events."""
    return int(np.searchsorted(curve.event_times, t, side="right")) - 1


def survival_at(curve, t):
    """Right-continuous step evaluation of the fitted survival function."""
    if t < 0:
        raise InvalidTimeError(f"time must be >= 0, got {t!r}")
    i = _step_index(curve, t)
    return 1.0 if i < 0 else float(curve.survival[i])


def greenwood_variance_at(curve, t):
    """Greenwood variance of the survival estimate at time t.

    Returns ``None`` where the variance is undefined (some n_i == d_i among
    the included terms); that is a value, not an error.
    """
    if t < 0:
        raise InvalidTimeError(f"time must be >= 0, got {t!r}")
    i = _step_index(curve, t)
    if i < 0:
        return 0.0
    g = curve.greenwood_cumsum[i]
    if not np.isfinite(g):
        return None
    return float(curve.survival[i] ** 2 * g)


def km_quantile(curve, p):
    """Smallest event time where the survival estimate drops to <= 1 - p.

    Returns ``None`` when the curve never reaches 1 - p (the quantile is not
    estimable from the observed follow-up).
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile level must be in (0, 1), got {p!r}")
    reached = curve.survival <= 1.0 - p
    if not reached.any():
        return None
    return float(curve.event_times[int(np.argmax(reached))])


def survival_ci_at(curve, t, alpha, transform=Transform.LOG):
    """Pointwise confidence limits for S(t) on the requested scale.

    Identity limits are S +- z * SE clipped to [0, 1]; log limits are
    S * exp(+- z * SE / S); log-minus-log limits are S ** exp(+- z * SE /
    (S * log S)).  Limits are returned sorted as (lower, upper).
    """
    transform = Transform(transform)
    var = greenwood_variance_at(curve, t)
    if var is None:
        raise UndefinedVarianceError(f"Greenwood variance undefined at t={t!r}")
    s = survival_at(curve, t)
    if transform is not Transform.IDENTITY and not 0.0 < s < 1.0:
        raise BoundaryValueError(f"{transform.value} limits need 0 < S < 1, got S={s!r}")
    z = normal_quantile(1.0 - alpha / 2.0)
    se = math.sqrt(var)
    if transform is Transform.IDENTITY:
        lo, hi = s - z * se, s + z * se
    elif transform is Transform.LOG:
        lo, hi = s * math.exp(-z * se / s), s * math.exp(z * se / s)
    else:
        if se == 0.0:
            lo = hi = s
        else:
            c = z * se / (s * math.log(s))
            lo, hi = s ** math.exp(-c), s ** math.exp(c)
    lo, hi = min(lo, hi), max(lo, hi)
    return max(0.0, lo), min(1.0, hi)
