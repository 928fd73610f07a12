import math

import numpy as np
import pytest

from mediansurv import Transform, bc_interval, bootstrap_percentile_ci, km_fit
from mediansurv.errors import NoEventsError, UpperUnstableError
from mediansurv.intervals import bootstrap_medians
from mediansurv.rng import substream
from mediansurv.survival import km_fit_arrays

Z975 = 1.959963984540054


# ---------------------------------------------------------------------------
# brute-force oracle: recompute the test statistic from scratch at every
# event time with definition-level formulas, scan the acceptance set


def brute_force_acceptance(records, p, alpha, transform):
    times = sorted({t for t, e in records if e})
    n = len(records)
    z = Z975 if alpha == 0.05 else None
    accepted = []
    for t in times:
        s = 1.0
        gw = 0.0
        defined = True
        for u in [x for x in times if x <= t]:
            d = sum(1 for tt, e in records if e and tt == u)
            at_risk = sum(1 for tt, _ in records if tt >= u)
            s *= 1.0 - d / at_risk
            if at_risk == d:
                defined = False
            else:
                gw += d / (at_risk * (at_risk - d))
        if not defined or s <= 0.0 or s >= 1.0:
            accepted.append(False)
            continue
        se = s * math.sqrt(gw)
        target = 1.0 - p
        if transform is Transform.IDENTITY:
            stat = abs(s - target) / se
        elif transform is Transform.LOG:
            stat = abs(math.log(s) - math.log(target)) / (se / s)
        else:
            stat = abs(math.log(-math.log(s)) - math.log(-math.log(target))) / (
                se / (s * abs(math.log(s)))
            )
        accepted.append(stat <= z)
    return times, accepted


def brute_force_interval(records, p, alpha, transform):
    times, accepted = brute_force_acceptance(records, p, alpha, transform)
    idx = [i for i, a in enumerate(accepted) if a]
    if not idx:
        return None
    lower = times[idx[0]]
    upper = times[idx[-1] + 1] if idx[-1] + 1 < len(times) else None
    return lower, upper


def random_records(rng, n, censor_frac=0.35):
    times = rng.exponential(10, n)
    events = rng.random(n) > censor_frac
    return [(float(t), bool(e)) for t, e in zip(times, events)]


def test_bc_matches_brute_force_scan_exactly():
    rng = np.random.default_rng(42)
    checked = 0
    for trial in range(200):
        n = int(rng.integers(3, 60))
        records = random_records(rng, n)
        curve = km_fit(records)
        if curve.n_event_times == 0:
            continue
        for transform in Transform:
            expected = brute_force_interval(records, 0.5, 0.05, transform)
            if expected is None:
                continue  # empty acceptance set: covered by the degenerate test
            ci = bc_interval(curve, 0.5, 0.05, transform)
            assert (ci.lower, ci.upper) == expected
            checked += 1
    assert checked > 300


def test_degenerate_single_jump_curve():
    # S drops 1 -> 0 at one time: one-point acceptance anchored at the estimate
    curve = km_fit([(3.0, 1), (3.0, 1), (3.0, 1)])
    for transform in Transform:
        ci = bc_interval(curve, 0.5, 0.05, transform)
        assert ci.lower == 3.0
        assert ci.upper is None


def test_bc_requires_events():
    with pytest.raises(NoEventsError):
        bc_interval(km_fit([(1, 0), (2, 0)]), 0.5, 0.05, Transform.LOG)


def test_bc_nesting_in_alpha():
    rng = np.random.default_rng(3)
    for _ in range(40):
        records = random_records(rng, int(rng.integers(10, 80)))
        curve = km_fit(records)
        if curve.n_event_times == 0:
            continue
        for transform in Transform:
            wide = bc_interval(curve, 0.5, 0.01, transform)
            narrow = bc_interval(curve, 0.5, 0.10, transform)
            if narrow.lower is not None and wide.lower is not None:
                assert wide.lower <= narrow.lower
            if narrow.upper is not None and wide.upper is not None:
                assert wide.upper >= narrow.upper
            if narrow.upper is None:
                assert wide.upper is None


def test_bc_contains_point_estimate():
    from mediansurv import km_quantile

    rng = np.random.default_rng(11)
    for _ in range(150):
        records = random_records(rng, int(rng.integers(3, 50)), censor_frac=0.5)
        curve = km_fit(records)
        if curve.n_event_times == 0:
            continue
        m = km_quantile(curve, 0.5)
        if m is None:
            continue
        for transform in Transform:
            ci = bc_interval(curve, 0.5, 0.05, transform)
            assert ci.lower is not None and ci.lower <= m
            if ci.upper is not None:
                assert m <= ci.upper


# ---------------------------------------------------------------------------
# bootstrap


def test_bootstrap_on_constant_records():
    records = [(5.0, 1)] * 12
    ci = bootstrap_percentile_ci(records, 0.5, 0.05, 200, seed=9)
    assert (ci.lower, ci.upper) == (5.0, 5.0)


def test_bootstrap_deterministic_and_order_invariant():
    rng = np.random.default_rng(5)
    records = random_records(rng, 40)
    a = bootstrap_percentile_ci(records, 0.5, 0.05, 500, seed=123)
    b = bootstrap_percentile_ci(records, 0.5, 0.05, 500, seed=123)
    assert (a.lower, a.upper) == (b.lower, b.upper)
    c = bootstrap_percentile_ci(list(reversed(records)), 0.5, 0.05, 500, seed=123)
    assert (a.lower, a.upper) == (c.lower, c.upper)
    d = bootstrap_percentile_ci(records, 0.5, 0.05, 500, seed=124)
    assert (a.lower, a.upper) != (d.lower, d.upper)


def test_bootstrap_replicates_match_per_replicate_streams():
    # replicate b depends only on (seed, b): computing a slice alone agrees
    rng = np.random.default_rng(8)
    records = random_records(rng, 30)
    times = np.array([t for t, _ in records])
    events = np.array([e for _, e in records], dtype=bool)
    full = bootstrap_medians(times, events, 0.5, 64, seed=77)

    order = np.lexsort((~events, times))
    ts, es = times[order], events[order].astype(float)
    n = len(records)
    for b in (0, 13, 63):
        idx = np.sort(substream(77, b).integers(0, n, n))
        surv = np.cumprod(1.0 - es[idx] / (n - np.arange(n)))
        reached = surv <= 0.5
        expected = ts[idx[np.argmax(reached)]] if reached.any() else np.inf
        assert full[b] == expected


def test_bootstrap_median_oracle_vs_km_fit():
    # each replicate's median equals km_quantile on the resampled dataset
    from mediansurv import km_quantile

    rng = np.random.default_rng(21)
    records = random_records(rng, 25)
    times = np.array([t for t, _ in records])
    events = np.array([e for _, e in records], dtype=bool)
    meds = bootstrap_medians(times, events, 0.5, 40, seed=5)
    order = np.lexsort((~events, times))
    ts, es = times[order], events[order]
    for b in range(40):
        idx = np.sort(substream(5, b).integers(0, len(records), len(records)))
        curve = km_fit_arrays(ts[idx], es[idx])
        m = km_quantile(curve, 0.5)
        assert meds[b] == (np.inf if m is None else m)


def test_bootstrap_upper_unstable():
    # nearly all censored: replicate medians are usually undefined
    records = [(1.0, 1)] + [(10.0, 0)] * 30
    with pytest.raises(UpperUnstableError):
        bootstrap_percentile_ci(records, 0.5, 0.05, 100, seed=3)


def test_bootstrap_no_events():
    with pytest.raises(NoEventsError):
        bootstrap_percentile_ci([(1.0, 0), (2.0, 0)], 0.5, 0.05, 100, seed=3)


def test_type1_quantile_convention_frozen():
    # with B=1000 and alpha=0.05 the limits are the 25th and 975th order stats
    records = [(float(i), True) for i in range(1, 41)]
    ci = bootstrap_percentile_ci(records, 0.5, 0.05, 1000, seed=2024)
    times = np.array([t for t, _ in records])
    events = np.ones(40, dtype=bool)
    meds = np.sort(bootstrap_medians(times, events, 0.5, 1000, seed=2024))
    assert ci.lower == meds[24]
    assert ci.upper == meds[974]
