"""Command-line interface.

Subcommands: ``pool`` (meta-analyze a study-summary CSV), ``km`` (fit one
event-level dataset and report median intervals), ``simulate`` (run a
study-level or meta-level scenario config) and ``prop1`` (scaled-width
convergence check).  Validation problems exit with status 2 and a
diagnostic on stderr.
"""

import argparse
import sys

from . import __version__, io as iomod
from .errors import MedianSurvError
from .intervals import bc_interval, bootstrap_percentile_ci_arrays
from .meta import derived_stats, pool_common, pool_random
from .outcomes import difference_outcome, median_outcome, ratio_outcome
from .simlab import (
    MetaScenarioConfig,
    ScenarioConfig,
    monte_carlo_true_se,
    prop1_convergence,
    run_meta_level,
    run_study_level,
)
from .survival import Transform, km_fit_arrays, km_quantile, survival_ci_at
from .wald import MedianSummary


def _summary_from_row(row):
    return MedianSummary(row.median, row.ci_lower, row.ci_upper, row.level)


def _pool_outcomes(rows, outcome, arm):
    if outcome == "median":
        chosen = [r for r in rows if r.arm in (arm, iomod.SINGLE)]
        if not chosen:
            raise MedianSurvError(f"no rows with arm {arm!r} (or single) in the input")
        return [
            median_outcome(_summary_from_row(r), study_id=r.study_id) for r in chosen
        ]
    pairs = iomod.pair_arms([r for r in rows if r.arm != iomod.SINGLE])
    if not pairs:
        raise MedianSurvError("no experimental/comparator pairs in the input")
    build = difference_outcome if outcome == "difference" else ratio_outcome
    return [
        build(_summary_from_row(exp), _summary_from_row(comp), study_id=exp.study_id)
        for exp, comp in pairs
    ]


def _cmd_pool(args):
    rows = iomod.parse_study_csv(args.input)
    dupes = iomod.duplicate_keys(rows)
    if dupes:
        print(f"note: duplicate (study_id, arm) rows retained: {dupes}", file=sys.stderr)
    if args.dedupe_comparator:
        if args.outcome != "median":
            raise MedianSurvError("--dedupe-comparator only applies to --outcome median")
        rows = iomod.dedupe_comparator(rows)

    outcomes = _pool_outcomes(rows, args.outcome, args.arm)
    if args.model == "common":
        result = pool_common(outcomes, args.alpha)
    else:
        result = pool_random(outcomes, args.alpha)
    result = derived_stats(outcomes, result, args.alpha)

    config = {
        "command": "pool",
        "input": args.input,
        "outcome": args.outcome,
        "model": args.model,
        "alpha": args.alpha,
        "arm": args.arm,
        "dedupe_comparator": args.dedupe_comparator,
    }
    with open(args.out + ".csv", "w") as fh:
        fh.write(iomod.emit_results(result, outcomes, "csv", config, seed=None))
    with open(args.out + ".json", "w") as fh:
        fh.write(iomod.emit_results(result, outcomes, "json", config, seed=None))
    iomod.write_study_echo(args.out + "_studies.csv", rows)
    print(f"wrote {args.out}.csv, {args.out}.json, {args.out}_studies.csv")
    return 0


def _cmd_km(args):
    times, events = iomod.parse_event_csv(args.input)
    curve = km_fit_arrays(times, events)
    transform = Transform(args.transform)
    median = km_quantile(curve, 0.5)
    bc = bc_interval(curve, 0.5, args.alpha, transform)
    import numpy as np

    boot = bootstrap_percentile_ci_arrays(
        np.asarray(times), np.asarray(events, dtype=bool),
        0.5, args.alpha, args.bootstrap_replicates, args.seed,
    )
    config = {
        "command": "km",
        "input": args.input,
        "alpha": args.alpha,
        "transform": transform.value,
        "bootstrap_replicates": args.bootstrap_replicates,
    }

    curve_rows = []
    for i, t in enumerate(curve.event_times):
        g = curve.greenwood_cumsum[i]
        se = float(np.sqrt(g) * curve.survival[i]) if np.isfinite(g) else None
        try:
            lo, hi = survival_ci_at(curve, t, args.alpha, transform)
        except MedianSurvError:
            lo = hi = None
        curve_rows.append(
            [t, int(curve.at_risk[i]), int(curve.deaths[i]),
             float(curve.survival[i]), se, lo, hi]
        )
    iomod.write_table(
        args.out + "_curve.csv",
        ["time", "at_risk", "deaths", "survival", "greenwood_se", "ci_lower", "ci_upper"],
        curve_rows, config, args.seed,
    )
    summary_rows = [
        ["median", median, None, None],
        ["bc_interval", None, bc.lower, bc.upper],
        ["bootstrap_interval", None, boot.lower, boot.upper],
    ]
    iomod.write_table(
        args.out + "_median.csv",
        ["record", "estimate", "ci_lower", "ci_upper"],
        summary_rows, config, args.seed,
    )
    print(f"wrote {args.out}_curve.csv, {args.out}_median.csv")
    return 0


def _cmd_simulate(args):
    cfg = iomod.parse_scenario_config(args.config, seed_override=args.seed)
    config = iomod.resolved_config(cfg)
    if isinstance(cfg, ScenarioConfig):
        oracle = monte_carlo_true_se(cfg, workers=args.workers)
        rows = run_study_level(cfg, oracle.se, workers=args.workers)
        table = [
            [r.scenario_id, r.method, r.replications, r.used, r.dropped,
             r.true_se, oracle.undefined_fraction, r.mean_se, r.sd_se, r.relative_bias_pct]
            for r in rows
        ]
        iomod.write_table(
            args.out,
            ["scenario_id", "method", "replications", "used", "dropped",
             "true_se", "oracle_undefined_fraction", "mean_se", "sd_se",
             "relative_bias_pct"],
            table, config, cfg.seed,
        )
    elif isinstance(cfg, MetaScenarioConfig):
        rows, redraws = run_meta_level(cfg, workers=args.workers)
        table = [
            [r.scenario_id, r.pipeline, r.target, r.replications, redraws,
             r.true_value, r.mean_estimate, r.bias, r.empirical_se, r.coverage]
            for r in rows
        ]
        iomod.write_table(
            args.out,
            ["scenario_id", "pipeline", "target", "replications", "redraws",
             "true_value", "mean_estimate", "bias", "empirical_se", "coverage"],
            table, config, cfg.seed,
        )
    else:
        raise MedianSurvError("use the prop1 subcommand for prop1 configs")
    print(f"wrote {args.out}")
    return 0


def _cmd_prop1(args):
    cfg = iomod.parse_scenario_config(args.config, seed_override=args.seed)
    config = iomod.resolved_config(cfg)
    rows = prop1_convergence(cfg, workers=args.workers)
    table = [
        [r.scenario_id, r.n, r.replications, r.used, r.dropped,
         r.mean_scaled_width, r.sd_scaled_width, r.target]
        for r in rows
    ]
    iomod.write_table(
        args.out,
        ["scenario_id", "n", "replications", "used", "dropped",
         "mean_scaled_width", "sd_scaled_width", "target"],
        table, config, cfg.seed,
    )
    print(f"wrote {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mediansurv",
        description="Meta-analysis of median survival times from reported "
        "Kaplan-Meier medians and confidence intervals.",
    )
    parser.add_argument("--version", action="version", version=f"mediansurv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pool", help="meta-analyze a study-summary CSV")
    p.add_argument("--input", required=True, help="study-summary CSV")
    p.add_argument("--outcome", choices=["median", "difference", "ratio"], default="median")
    p.add_argument("--model", choices=["common", "random"], default="random")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--arm", choices=["experimental", "comparator"], default="comparator",
                   help="arm used for single-arm (median) pooling")
    p.add_argument("--dedupe-comparator", action="store_true",
                   help="drop exact-duplicate comparator rows before median pooling")
    p.add_argument("--out", default="results", help="output base path")
    p.set_defaults(func=_cmd_pool)

    p = sub.add_parser("km", help="fit one event-level dataset (CSV: time,status)")
    p.add_argument("--input", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--transform", choices=[t.value for t in Transform], default="loglog")
    p.add_argument("--bootstrap-replicates", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="km", help="output base path")
    p.set_defaults(func=_cmd_km)

    p = sub.add_parser("simulate", help="run a study-level or meta-level scenario")
    p.add_argument("--config", required=True, help="scenario config file")
    p.add_argument("--out", default="simulation.csv")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("prop1", help="scaled BC-width convergence check")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="prop1.csv")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_prop1)
    return parser


def run_cli(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MedianSurvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    raise SystemExit(run_cli())


if __name__ == "__main__":
    main()
