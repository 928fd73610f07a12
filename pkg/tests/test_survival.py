import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mediansurv import (
    EventRecord,
    Transform,
    greenwood_variance_at,
    km_fit,
    km_quantile,
    survival_at,
    survival_ci_at,
)
from mediansurv.errors import (
    BoundaryValueError,
    EmptyInputError,
    InvalidTimeError,
    UndefinedVarianceError,
)
from mediansurv.survival import km_fit_arrays

Z975 = 1.959963984540054


def brute_force_survival(records, t):
    """Definition-level product-limit evaluation, one factor per event time."""
    event_times = sorted({time for time, event in records if event and time <= t})
    s = 1.0
    for u in event_times:
        d = sum(1 for time, event in records if event and time == u)
        n = sum(1 for time, _ in records if time >= u)
        s *= 1.0 - d / n
    return s


def test_no_censoring_equals_empirical_survival():
    rng = np.random.default_rng(1)
    for _ in range(25):
        n = int(rng.integers(1, 40))
        times = np.round(rng.exponential(10, n), 1)  # rounding forces ties
        curve = km_fit_arrays(times, np.ones(n, dtype=bool))
        for t in np.concatenate([times, rng.uniform(0, 30, 5)]):
            expected = np.sum(times > t) / n
            assert survival_at(curve, float(t)) == pytest.approx(expected, abs=1e-12)


def test_uncensored_triple():
    curve = km_fit([(1, 1), (2, 1), (3, 1)])
    assert curve.survival == pytest.approx([2 / 3, 1 / 3, 0.0])
    assert list(curve.event_times) == [1, 2, 3]


def test_hand_product_limit_with_censoring():
    curve = km_fit([(1, 1), (2, 0), (3, 1), (4, 1)])
    assert survival_at(curve, 1) == pytest.approx(3 / 4)
    assert survival_at(curve, 3) == pytest.approx(3 / 8)
    assert survival_at(curve, 4) == pytest.approx(0.0)


def test_all_censored_curve_is_flat_one():
    curve = km_fit([(1, 0), (5, 0), (9, 0)])
    assert curve.n_event_times == 0
    assert survival_at(curve, 100.0) == 1.0


def test_step_evaluation():
    curve = km_fit([(1, 1), (2, 1), (3, 1)])
    assert survival_at(curve, 1.5) == pytest.approx(2 / 3)
    assert survival_at(curve, 0) == 1.0
    assert survival_at(curve, 3) == 0.0


def test_tie_convention_censored_at_risk():
    # censored at t=2 is still at risk for the event at t=2
    curve = km_fit([(1, 1), (2, 1), (2, 0), (4, 1)])
    # S(2) = (1 - 1/4)(1 - 1/3) = 1/2
    assert survival_at(curve, 2) == pytest.approx(0.5)
    i = list(curve.event_times).index(2.0)
    assert curve.at_risk[i] == 3


def test_greenwood_hand_value():
    curve = km_fit([(1, 1), (2, 0), (3, 1), (4, 1)])
    assert greenwood_variance_at(curve, 1) == pytest.approx((3 / 4) ** 2 * (1 / 12))
    assert greenwood_variance_at(curve, 0.5) == 0.0


def test_greenwood_undefined_when_risk_set_exhausted():
    curve = km_fit([(1, 1), (2, 1), (3, 1)])
    assert greenwood_variance_at(curve, 3) is None
    assert greenwood_variance_at(curve, 2) is not None


def test_km_quantile_examples():
    curve = km_fit([(1, 1), (2, 1), (3, 1)])
    assert km_quantile(curve, 0.5) == 2
    all_censored = km_fit([(1, 0), (2, 0)])
    assert km_quantile(all_censored, 0.5) is None
    censored_mix = km_fit([(1, 1), (2, 0), (3, 1), (4, 1)])
    assert km_quantile(censored_mix, 0.5) == 3


def test_fit_errors():
    with pytest.raises(EmptyInputError):
        km_fit([])
    with pytest.raises(InvalidTimeError):
        km_fit([(-1, 1)])
    with pytest.raises(InvalidTimeError):
        km_fit([(math.nan, 1)])
    with pytest.raises(InvalidTimeError):
        EventRecord(time=-2.0, event=True)


@given(
    st.lists(
        st.tuples(st.floats(0, 50, allow_nan=False), st.booleans()), min_size=1, max_size=40
    ),
    st.randoms(),
)
@settings(max_examples=60, deadline=None)
def test_fit_invariant_under_record_order(records, rnd):
    base = km_fit(records)
    shuffled = list(records)
    rnd.shuffle(shuffled)
    other = km_fit(shuffled)
    assert np.array_equal(base.event_times, other.event_times)
    assert np.array_equal(base.survival, other.survival)
    assert np.array_equal(base.at_risk, other.at_risk)


@given(
    st.lists(
        st.tuples(st.floats(0, 50, allow_nan=False), st.booleans()), min_size=1, max_size=40
    )
)
@settings(max_examples=60, deadline=None)
def test_survival_monotone_nonincreasing(records):
    curve = km_fit(records)
    grid = np.linspace(0, 60, 121)
    values = [survival_at(curve, float(t)) for t in grid]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


def test_ci_zero_variance_degenerate_for_all_transforms():
    # S = 0.5 with SE = 0 collapses to (0.5, 0.5) on every scale
    curve = km_fit([(1, 1), (2, 1)])
    fake = curve.__class__(
        event_times=curve.event_times,
        deaths=curve.deaths,
        at_risk=curve.at_risk,
        survival=np.array([0.5, 0.0]),
        greenwood_cumsum=np.array([0.0, np.nan]),
        sample_size=2,
    )
    for tr in Transform:
        lo, hi = survival_ci_at(fake, 1, 0.05, tr)
        assert (lo, hi) == (0.5, 0.5)


def _curve_with(s, se):
    # single-point curve carrying survival s and Greenwood SD se
    return km_fit([(1, 1)]).__class__(
        event_times=np.array([1.0]),
        deaths=np.array([1]),
        at_risk=np.array([10]),
        survival=np.array([s]),
        greenwood_cumsum=np.array([(se / s) ** 2]),
        sample_size=10,
    )


def test_ci_log_hand_value():
    # hand evaluation of S * exp(-+ z SE / S) at S=0.8, SE=0.05, alpha=0.05
    lo, hi = survival_ci_at(_curve_with(0.8, 0.05), 1, 0.05, Transform.LOG)
    assert lo == pytest.approx(0.8 * math.exp(-Z975 * 0.0625), abs=1e-9)
    assert hi == pytest.approx(0.8 * math.exp(+Z975 * 0.0625), abs=1e-9)
    assert (round(lo, 5), round(hi, 5)) == (0.70777, 0.90425)


def test_ci_identity_hand_value():
    lo, hi = survival_ci_at(_curve_with(0.8, 0.05), 1, 0.05, Transform.IDENTITY)
    assert lo == pytest.approx(0.70200, abs=5e-6)
    assert hi == pytest.approx(0.89800, abs=5e-6)


def test_ci_identity_clipping():
    lo, hi = survival_ci_at(_curve_with(0.95, 0.2), 1, 0.05, Transform.IDENTITY)
    assert 0.0 <= lo and hi == 1.0


def test_ci_transform_consistency():
    # lower <= S <= upper on every scale, and both converge to S as SE -> 0
    for s in (0.2, 0.5, 0.8):
        for se in (0.05, 0.01, 1e-6, 1e-9):
            for tr in Transform:
                lo, hi = survival_ci_at(_curve_with(s, se), 1, 0.05, tr)
                assert lo <= s <= hi
                if se <= 1e-6:
                    assert lo == pytest.approx(s, abs=1e-4)
                    assert hi == pytest.approx(s, abs=1e-4)


def test_ci_errors():
    curve = km_fit([(1, 1), (2, 1), (3, 1)])
    with pytest.raises(UndefinedVarianceError):
        survival_ci_at(curve, 3, 0.05, Transform.LOG)
    with pytest.raises(BoundaryValueError):
        survival_ci_at(curve, 0.2, 0.05, Transform.LOG)  # S = 1 before first event
    lo, hi = survival_ci_at(curve, 0.2, 0.05, Transform.IDENTITY)
    assert (lo, hi) == (1.0, 1.0)


def test_brute_force_cross_check_with_censoring():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(2, 30))
        records = [
            (float(np.round(rng.exponential(5), 1)), bool(rng.random() < 0.7))
            for _ in range(n)
        ]
        curve = km_fit(records)
        for t in rng.uniform(0, 15, 8):
            assert survival_at(curve, float(t)) == pytest.approx(
                brute_force_survival(records, float(t)), abs=1e-12
            )
