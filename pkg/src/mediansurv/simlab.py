"""Deterministic simulation laboratory.

Study-level experiments measure the relative bias of interval-recovered
standard errors against a Monte-Carlo true SE; meta-level experiments pool
simulated studies through both the interval-recovery pipeline and a
benchmark pipeline that uses oracle standard errors; a convergence check
tracks the scaled test-inversion interval width against its analytic limit.

Every random draw comes from a stream derived from (seed, structural
indices), so all results are pure functions of the configuration and seed,
invariant to execution order and worker count.  The Monte-Carlo oracles
consume their replicates in fixed blocks of 4096 with one stream per block.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distributions import Exponential, Uniform
from .errors import NoEventsError, UndefinedRateExceededError, UpperUnstableError
from .intervals import bc_interval, bootstrap_percentile_ci_arrays
from .meta import pool_common, pool_random
from .outcomes import LOG, NATURAL, StudyOutcome
from .quantiles import normal_quantile
from .rng import substream
from .survival import Transform, km_fit_arrays, km_quantile
from .wald import _wald_from_limits

_ORACLE_BLOCK = 4096
_REP_CHUNK = 64

BC_LOG = "bc-log"
BC_LOGLOG = "bc-loglog"
BOOTSTRAP = "bootstrap"
CI_METHODS = (BC_LOG, BC_LOGLOG, BOOTSTRAP)

MEDIAN = "median"
DIFFERENCE = "difference"
RATIO = "ratio"

ADDITIVE = "additive"
MULTIPLICATIVE = "multiplicative"


@dataclass(frozen=True)
class ScenarioConfig:
    """One study-level scenario: event/censoring laws, n, and CI policy."""

    event_dist: object
    censor_dist: object | None
    n: int
    replications: int
    seed: int
    admin_cutoff: float = 100.0
    ci_methods: tuple = CI_METHODS
    alpha: float = 0.05
    bootstrap_replicates: int = 1000
    true_se_reps: int = 100_000
    scenario_id: str = "scenario"


@dataclass(frozen=True)
class MetaScenarioConfig:
    """One meta-level scenario: outcome type, heterogeneity law and sizes."""

    outcome: str
    tau2: float
    replications: int
    seed: int
    n_studies: int = 20
    n_range: tuple = (50, 1000)
    base_rate: float = 0.025
    heterogeneity_scale: str = ADDITIVE
    admin_cutoff: float = 100.0
    alpha: float = 0.05
    bootstrap_replicates: int = 1000
    benchmark_reps: int = 1000
    true_pooled: float | None = None
    scenario_id: str = "meta-scenario"


@dataclass(frozen=True)
class Prop1Config:
    """Scaled-width convergence check over a grid of sample sizes."""

    event_dist: object
    n_grid: tuple
    replications: int
    seed: int
    censor_dist: object | None = None
    admin_cutoff: float = math.inf
    alpha: float = 0.05
    transform: Transform = Transform.IDENTITY
    target_oracle_reps: int = 10_000
    scenario_id: str = "prop1"


@dataclass(frozen=True)
class TrueSE:
    se: float
    undefined_fraction: float
    reps: int


@dataclass(frozen=True)
class StudyLevelRow:
    scenario_id: str
    method: str
    replications: int
    used: int
    dropped: int
    true_se: float
    mean_se: float
    sd_se: float
    relative_bias_pct: float


@dataclass(frozen=True)
class MetaLevelRow:
    scenario_id: str
    pipeline: str
    target: str
    replications: int
    true_value: float
    mean_estimate: float
    bias: float
    empirical_se: float
    coverage: float


@dataclass(frozen=True)
class Prop1Row:
    scenario_id: str
    n: int
    replications: int
    used: int
    dropped: int
    mean_scaled_width: float
    sd_scaled_width: float
    target: float


def simulate_arm(event_dist, censor_dist, admin_cutoff, n, rng):
    """Observed times and event indicators for one arm.

    Event times are drawn first, censoring times second, from the same
    stream; the observed time is min(T, C, cutoff) and the status is an
    event iff T <= min(C, cutoff).
    """
    t = event_dist.sample(rng, n)
    if censor_dist is None:
        cut = np.full(np.shape(t), admin_cutoff, dtype=float)
    else:
        cut = np.minimum(censor_dist.sample(rng, n), admin_cutoff)
    return np.minimum(t, cut), t <= cut


def generate_study(cfg, stream):
    """One simulated dataset as (time, status) pairs."""
    y, e = simulate_arm(cfg.event_dist, cfg.censor_dist, cfg.admin_cutoff, cfg.n, stream)
    return list(zip(y.tolist(), e.tolist()))


def km_median_batch(times, events, p=0.5):
    """Product-limit quantiles for a batch of datasets (one per row).

    Rows are ordered by time alone, which is exact for continuously
    distributed data (event/censoring ties occur with probability zero;
    administrative-cutoff ties are all censored, where order is irrelevant).
    Returns NaN where the quantile is not reached.
    """
    order = np.argsort(times, axis=1, kind="stable")
    ts = np.take_along_axis(times, order, axis=1)
    es = np.take_along_axis(events, order, axis=1).astype(float)
    n = times.shape[1]
    at_risk = (n - np.arange(n)).astype(float)
    surv = np.cumprod(1.0 - es / at_risk, axis=1)
    reached = surv <= 1.0 - p
    has = reached.any(axis=1)
    pos = np.argmax(reached, axis=1)
    meds = ts[np.arange(times.shape[0]), pos]
    return np.where(has, meds, np.nan)


def _map_chunks(worker_fn, n_items, workers, chunk=_REP_CHUNK):
    """Apply worker_fn to fixed [start, stop) chunks; order-stable results."""
    spans = [(a, min(a + chunk, n_items)) for a in range(0, n_items, chunk)]
    if workers <= 1:
        parts = [worker_fn(a, b) for a, b in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda s: worker_fn(*s), spans))
    out = []
    for part in parts:
        out.extend(part)
    return out


def monte_carlo_true_se(cfg, oracle_reps=None, workers=1):
    """Monte-Carlo standard deviation of the product-limit median estimator.

    Simulates ``oracle_reps`` datasets under the scenario's data-generating
    mechanism and returns the SD of the median estimates.  Replicates with an
    undefined median are dropped; if their fraction exceeds 1% the oracle is
    considered unreliable and UndefinedRateExceededError is raised.
    """
    reps = cfg.true_se_reps if oracle_reps is None else int(oracle_reps)
    if reps < 1000:
        raise ValueError(f"true-SE oracle needs at least 1000 replicates, got {reps!r}")

    def block(start, stop):
        rng = substream(cfg.seed, "true-se", start)
        m = stop - start
        t, e = simulate_arm(cfg.event_dist, cfg.censor_dist, cfg.admin_cutoff, (m, cfg.n), rng)
        return [km_median_batch(t, e)]

    blocks = _map_chunks(block, reps, workers, chunk=_ORACLE_BLOCK)
    meds = np.concatenate(blocks)
    undefined = float(np.mean(np.isnan(meds)))
    if undefined > 0.01:
        raise UndefinedRateExceededError(
            f"{undefined:.2%} of oracle replicates had undefined medians (limit 1%)"
        )
    return TrueSE(float(np.nanstd(meds, ddof=1)), undefined, reps)


def _interval_se(method, curve, times, events, alpha, boot_reps, boot_seed):
    """SE recovered from one reported interval, or None when unusable."""
    try:
        if method == BC_LOG:
            ci = bc_interval(curve, 0.5, alpha, Transform.LOG)
        elif method == BC_LOGLOG:
            ci = bc_interval(curve, 0.5, alpha, Transform.LOGLOG)
        elif method == BOOTSTRAP:
            ci = bootstrap_percentile_ci_arrays(times, events, 0.5, alpha, boot_reps, boot_seed)
        else:
            raise ValueError(f"unknown CI method {method!r}")
    except (NoEventsError, UpperUnstableError):
        return None
    if ci.lower is None or ci.upper is None:
        return None
    return _wald_from_limits(ci.lower, ci.upper, 1.0 - alpha)


def run_study_level(cfg, true_se, workers=1):
    """Relative bias of interval-recovered SEs against the true SE.

    Replications with an undefined median are dropped for every method;
    replications whose interval is unbounded or unstable are dropped for
    that method only.  Drop counts are reported per method.
    """
    if true_se <= 0:
        raise ValueError(f"true_se must be positive, got {true_se!r}")

    def rep_chunk(start, stop):
        out = []
        for rep in range(start, stop):
            rng = substream(cfg.seed, "study-level", rep)
            times, events = simulate_arm(
                cfg.event_dist, cfg.censor_dist, cfg.admin_cutoff, cfg.n, rng
            )
            boot_seed = int(rng.integers(2**63))
            curve = km_fit_arrays(times, events)
            if km_quantile(curve, 0.5) is None:
                out.append({m: None for m in cfg.ci_methods})
                continue
            out.append(
                {
                    m: _interval_se(
                        m, curve, times, events, cfg.alpha,
                        cfg.bootstrap_replicates, boot_seed,
                    )
                    for m in cfg.ci_methods
                }
            )
        return out

    per_rep = _map_chunks(rep_chunk, cfg.replications, workers)
    rows = []
    for method in cfg.ci_methods:
        ses = np.array([r[method] for r in per_rep if r[method] is not None], dtype=float)
        used = len(ses)
        rel_bias = float(np.mean((ses - true_se) / true_se) * 100.0) if used else math.nan
        rows.append(
            StudyLevelRow(
                scenario_id=cfg.scenario_id,
                method=method,
                replications=cfg.replications,
                used=used,
                dropped=cfg.replications - used,
                true_se=float(true_se),
                mean_se=float(np.mean(ses)) if used else math.nan,
                sd_se=float(np.std(ses, ddof=1)) if used > 1 else math.nan,
                relative_bias_pct=rel_bias,
            )
        )
    return rows


def _study_median_draw(cfg, rng):
    base = math.log(2.0) / cfg.base_rate
    sd = math.sqrt(cfg.tau2)
    if cfg.heterogeneity_scale == ADDITIVE:
        for _ in range(1000):
            m = base + rng.normal() * sd
            if m > 0:
                return m
        raise RuntimeError("could not draw a positive study median")
    if cfg.heterogeneity_scale == MULTIPLICATIVE:
        return base * math.exp(rng.normal() * sd)
    raise ValueError(f"unknown heterogeneity scale {cfg.heterogeneity_scale!r}")


def _true_pooled(cfg):
    if cfg.true_pooled is not None:
        return cfg.true_pooled
    if cfg.outcome == MEDIAN and cfg.heterogeneity_scale == ADDITIVE:
        return math.log(2.0) / cfg.base_rate
    if cfg.outcome == DIFFERENCE and cfg.heterogeneity_scale == ADDITIVE:
        return 0.0
    if cfg.outcome == RATIO and cfg.heterogeneity_scale == MULTIPLICATIVE:
        return 0.0
    raise ValueError(
        "set true_pooled explicitly for misspecified-heterogeneity scenarios"
    )


def _benchmark_se(cfg, n, lam1, censor, rng):
    """Oracle SE of the study outcome from benchmark_reps simulated datasets."""
    reps = cfg.benchmark_reps
    t1, e1 = simulate_arm(Exponential(lam1), censor, cfg.admin_cutoff, (reps, n), rng)
    med1 = km_median_batch(t1, e1)
    if cfg.outcome == MEDIAN:
        vals = med1
    else:
        t2, e2 = simulate_arm(
            Exponential(cfg.base_rate), censor, cfg.admin_cutoff, (reps, n), rng
        )
        med2 = km_median_batch(t2, e2)
        if cfg.outcome == DIFFERENCE:
            vals = med1 - med2
        else:
            with np.errstate(invalid="ignore", divide="ignore"):
                vals = np.log(med1 / med2)
    vals = vals[np.isfinite(vals)]
    if len(vals) < reps // 2:
        return None
    return float(np.std(vals, ddof=1))


def _simulate_meta_study(cfg, rep, study):
    """One study of a meta replication; redraws until usable (counted)."""
    two_arm = cfg.outcome in (DIFFERENCE, RATIO)
    for attempt in range(100):
        rng = substream(cfg.seed, "meta", rep, study, attempt)
        n = int(rng.integers(cfg.n_range[0], cfg.n_range[1] + 1))
        m1 = _study_median_draw(cfg, rng)
        censor = Uniform(0.0, 100.0) if int(rng.integers(2)) == 0 else Exponential(1.0 / 60.0)
        method = CI_METHODS[int(rng.integers(3))]
        boot_seed1 = int(rng.integers(2**63))
        boot_seed2 = int(rng.integers(2**63))
        lam1 = math.log(2.0) / m1

        arms = []
        ok = True
        specs = [(lam1, boot_seed1)] + ([(cfg.base_rate, boot_seed2)] if two_arm else [])
        for lam, boot_seed in specs:
            times, events = simulate_arm(Exponential(lam), censor, cfg.admin_cutoff, n, rng)
            curve = km_fit_arrays(times, events)
            med = km_quantile(curve, 0.5)
            if med is None:
                ok = False
                break
            se = _interval_se(
                method, curve, times, events, cfg.alpha, cfg.bootstrap_replicates, boot_seed
            )
            if se is None or se == 0.0:
                ok = False
                break
            arms.append((med, se))
        if not ok:
            continue

        if cfg.outcome == MEDIAN:
            est, se, scale = arms[0][0], arms[0][1], NATURAL
        elif cfg.outcome == DIFFERENCE:
            est = arms[0][0] - arms[1][0]
            se = math.hypot(arms[0][1], arms[1][1])
            scale = NATURAL
        else:
            est = math.log(arms[0][0] / arms[1][0])
            se = math.sqrt(
                (arms[0][1] / arms[0][0]) ** 2 + (arms[1][1] / arms[1][0]) ** 2
            )
            scale = LOG

        bench_rng = substream(cfg.seed, "meta", rep, study, attempt, "bench")
        bench_se = _benchmark_se(cfg, n, lam1, censor, bench_rng)
        if bench_se is None or bench_se == 0.0:
            continue

        sid = f"study-{study}"
        return (
            StudyOutcome(est, se, scale, sid),
            StudyOutcome(est, bench_se, scale, sid),
            attempt,
        )
    raise RuntimeError(f"study {study!r} exceeded the redraw limit")


def _pool_pipeline(cfg, outs, theta0):
    if cfg.tau2 > 0:
        res = pool_random(outs, cfg.alpha)
        tau2_cover = (
            res.tau2_ci is not None and res.tau2_ci[0] <= cfg.tau2 <= res.tau2_ci[1]
        )
    else:
        res = pool_common(outs, cfg.alpha)
        tau2_cover = None
    covered = res.pooled_ci is not None and res.pooled_ci[0] <= theta0 <= res.pooled_ci[1]
    return res.pooled, covered, res.tau2, tau2_cover


def run_meta_level(cfg, workers=1):
    """Bias, empirical SE and coverage for the pooled outcome and tau^2.

    Each replication simulates ``n_studies`` studies, computes outcomes via
    the interval-recovery pipeline and via the benchmark pipeline (oracle
    SEs from ``benchmark_reps`` Monte-Carlo samples per study), and pools
    each with the random-effects model (common-effect when tau2 = 0).
    Returns the summary rows and the total number of study redraws.
    """
    theta0 = _true_pooled(cfg)

    def rep_chunk(start, stop):
        out = []
        for rep in range(start, stop):
            wald_outs, bench_outs = [], []
            redraws = 0
            for s in range(cfg.n_studies):
                wald_o, bench_o, attempt = _simulate_meta_study(cfg, rep, s)
                redraws += attempt
                wald_outs.append(wald_o)
                bench_outs.append(bench_o)
            rec = {"redraws": redraws}
            rec["wald"] = _pool_pipeline(cfg, wald_outs, theta0)
            rec["benchmark"] = _pool_pipeline(cfg, bench_outs, theta0)
            out.append(rec)
        return out

    per_rep = _map_chunks(rep_chunk, cfg.replications, workers, chunk=4)
    rows = []
    for pipeline in ("wald", "benchmark"):
        est = np.array([r[pipeline][0] for r in per_rep])
        cover = np.array([r[pipeline][1] for r in per_rep], dtype=float)
        rows.append(
            MetaLevelRow(
                scenario_id=cfg.scenario_id,
                pipeline=pipeline,
                target="pooled",
                replications=cfg.replications,
                true_value=theta0,
                mean_estimate=float(np.mean(est)),
                bias=float(np.mean(est) - theta0),
                empirical_se=float(np.std(est, ddof=1)),
                coverage=float(np.mean(cover)),
            )
        )
        if cfg.tau2 > 0:
            t2 = np.array([r[pipeline][2] for r in per_rep])
            t2_cover = np.array([r[pipeline][3] for r in per_rep], dtype=float)
            rows.append(
                MetaLevelRow(
                    scenario_id=cfg.scenario_id,
                    pipeline=pipeline,
                    target="tau2",
                    replications=cfg.replications,
                    true_value=cfg.tau2,
                    mean_estimate=float(np.mean(t2)),
                    bias=float(np.mean(t2) - cfg.tau2),
                    empirical_se=float(np.std(t2, ddof=1)),
                    coverage=float(np.mean(t2_cover)),
                )
            )
    redraws = int(sum(r["redraws"] for r in per_rep))
    return rows, redraws


def prop1_convergence(cfg, workers=1):
    """Mean scaled interval width sqrt(n) (U - L) / (2 z) per sample size.

    The limit is the asymptotic SE of the median scaled by sqrt(n): computed
    analytically (1/rate) for uncensored exponential event times, otherwise
    from the Monte-Carlo true-SE oracle.
    """
    z = normal_quantile(1.0 - cfg.alpha / 2.0)
    uncensored_exponential = (
        isinstance(cfg.event_dist, Exponential)
        and cfg.censor_dist is None
        and math.isinf(cfg.admin_cutoff)
    )
    rows = []
    for n in cfg.n_grid:
        def rep_chunk(start, stop, n=n):
            out = []
            for rep in range(start, stop):
                rng = substream(cfg.seed, "prop1", n, rep)
                times, events = simulate_arm(
                    cfg.event_dist, cfg.censor_dist, cfg.admin_cutoff, n, rng
                )
                curve = km_fit_arrays(times, events)
                try:
                    ci = bc_interval(curve, 0.5, cfg.alpha, cfg.transform)
                except NoEventsError:
                    out.append(None)
                    continue
                if ci.lower is None or ci.upper is None:
                    out.append(None)
                    continue
                out.append(math.sqrt(n) * (ci.upper - ci.lower) / (2.0 * z))
            return out

        scaled = [s for s in _map_chunks(rep_chunk, cfg.replications, workers) if s is not None]
        if uncensored_exponential:
            target = 1.0 / cfg.event_dist.rate
        else:
            oracle_cfg = ScenarioConfig(
                event_dist=cfg.event_dist,
                censor_dist=cfg.censor_dist,
                n=n,
                replications=cfg.replications,
                seed=cfg.seed,
                admin_cutoff=cfg.admin_cutoff,
                alpha=cfg.alpha,
            )
            target = monte_carlo_true_se(
                oracle_cfg, cfg.target_oracle_reps, workers
            ).se * math.sqrt(n)
        rows.append(
            Prop1Row(
                scenario_id=cfg.scenario_id,
                n=int(n),
                replications=cfg.replications,
                used=len(scaled),
                dropped=cfg.replications - len(scaled),
                mean_scaled_width=float(np.mean(scaled)),
                sd_scaled_width=float(np.std(scaled, ddof=1)),
                target=float(target),
            )
        )
    return rows


def empirical_censoring_rate(event_dist, censor_dist, admin_cutoff, n_subjects, seed):
    """Fraction of censored observations in one large simulated cohort."""
    rng = substream(seed, "censoring-rate")
    _, events = simulate_arm(event_dist, censor_dist, admin_cutoff, int(n_subjects), rng)
    return float(1.0 - np.mean(events))
