"""File formats: study-summary CSV, event-level CSV, scenario configs and
result emission.

Numbers are serialized with 10 significant digits in both CSV and JSON, so
the two formats carry identical values once parsed.  Every emitted document
embeds the tool version, the resolved configuration and the seed; no
timestamps, so reruns are byte-identical.
"""

import configparser
import csv
import json
import math
from dataclasses import dataclass

from . import __version__
from .distributions import Exponential, Uniform, Weibull, WeibullMixture
from .errors import InvariantViolationError, ParseError
from .quantiles import normal_quantile
from .simlab import CI_METHODS, MetaScenarioConfig, Prop1Config, ScenarioConfig
from .survival import Transform

EXPERIMENTAL = "experimental"
COMPARATOR = "comparator"
SINGLE = "single"

_STUDY_HEADER = ["study_id", "arm", "n", "median", "ci_lower", "ci_upper"]


@dataclass(frozen=True)
class StudyRow:
    study_id: str
    arm: str
    n: int
    median: float
    ci_lower: float | None
    ci_upper: float | None
    level: float = 0.95


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)


def _round10(x):
    """Float carrying exactly the 10 significant digits that CSV emits."""
    if x is None or not isinstance(x, float):
        return x
    return float(format(x, ".10g"))


def parse_study_csv(path):
    """Parse a study-summary CSV with the documented schema.

    Header must be ``study_id,arm,n,median,ci_lower,ci_upper[,level]``;
    empty CI cells mean a missing limit.  Duplicate (study_id, arm) rows are
    retained; use :func:`duplicate_keys` to flag them.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if header not in (_STUDY_HEADER, _STUDY_HEADER + ["level"]):
            raise ParseError(
                f"{path}: line 1: header must be "
                f"'{','.join(_STUDY_HEADER)}[,level]', got {','.join(header)!r}"
            )
        has_level = len(header) == 7
        for lineno, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                raise ParseError(f"{path}: line {lineno}: expected {len(header)} cells")
            try:
                row = StudyRow(
                    study_id=cells[0].strip(),
                    arm=_parse_arm(cells[1]),
                    n=int(cells[2]),
                    median=float(cells[3]),
                    ci_lower=_opt_float(cells[4]),
                    ci_upper=_opt_float(cells[5]),
                    level=float(cells[6]) if has_level and cells[6].strip() else 0.95,
                )
            except (ValueError, KeyError) as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}") from None
            _validate_row(row, lineno, path)
            rows.append(row)
    return rows


def _parse_arm(cell):
    arm = cell.strip().lower()
    if arm not in (EXPERIMENTAL, COMPARATOR, SINGLE):
        raise ValueError(f"arm must be experimental, comparator or single, got {cell!r}")
    return arm


def _opt_float(cell):
    cell = cell.strip()
    return float(cell) if cell else None


def _validate_row(row, lineno, path):
    where = f"{path}: line {lineno} (study {row.study_id!r}, {row.arm} arm)"
    if row.n <= 0:
        raise InvariantViolationError(f"{where}: n must be positive")
    if row.median <= 0 or not math.isfinite(row.median):
        raise InvariantViolationError(f"{where}: median must be positive and finite")
    if not 0.0 < row.level < 1.0:
        raise InvariantViolationError(f"{where}: level must be in (0, 1)")
    if row.ci_lower is not None and row.ci_lower > row.median:
        raise InvariantViolationError(f"{where}: ci_lower exceeds the median")
    if row.ci_upper is not None and row.ci_upper < row.median:
        raise InvariantViolationError(f"{where}: ci_upper is below the median")


def duplicate_keys(rows):
    """(study_id, arm) pairs that occur more than once, in input order."""
    seen, dupes = set(), []
    for row in rows:
        key = (row.study_id, row.arm)
        if key in seen and key not in dupes:
            dupes.append(key)
        seen.add(key)
    return dupes


def dedupe_comparator(rows):
    """Drop comparator rows that duplicate an earlier row exactly."""
    seen, out = set(), []
    for row in rows:
        key = (row.study_id, row.arm, row.n, row.median, row.ci_lower, row.ci_upper, row.level)
        if row.arm == COMPARATOR and key in seen:
            continue
        seen.add(key)
        out.append(row)
    return out


def pair_arms(rows):
    """Pair experimental and comparator rows per study, in input order.

    Studies contributing several estimate sets pair their i-th experimental
    row with their i-th comparator row.
    """
    by_study: dict = {}
    order = []
    for row in rows:
        if row.arm == SINGLE:
            raise InvariantViolationError(
                f"study {row.study_id!r}: single-arm rows cannot be paired"
            )
        if row.study_id not in by_study:
            by_study[row.study_id] = {EXPERIMENTAL: [], COMPARATOR: []}
            order.append(row.study_id)
        by_study[row.study_id][row.arm].append(row)
    pairs = []
    for sid in order:
        exps = by_study[sid][EXPERIMENTAL]
        comps = by_study[sid][COMPARATOR]
        if len(exps) != len(comps):
            raise InvariantViolationError(
                f"study {sid!r}: {len(exps)} experimental rows vs {len(comps)} comparator rows"
            )
        pairs.extend(zip(exps, comps))
    return pairs


def parse_event_csv(path):
    """Parse an event-level CSV with header ``time,status`` (1=event)."""
    times, events = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        if header != ["time", "status"]:
            raise ParseError(f"{path}: line 1: header must be 'time,status'")
        for lineno, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            try:
                t = float(cells[0])
                status = int(cells[1])
            except (ValueError, IndexError):
                raise ParseError(f"{path}: line {lineno}: expected 'time,status'") from None
            if status not in (0, 1):
                raise ParseError(f"{path}: line {lineno}: status must be 0 or 1")
            times.append(t)
            events.append(bool(status))
    return times, events


# ---------------------------------------------------------------------------
# scenario configuration files


def _number(text):
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    if text.lower() in ("inf", "+inf"):
        return math.inf
    return float(text)


def _dist_from_config(section, prefix):
    kind = section.get(f"{prefix}_dist", "none").strip().lower()
    if kind == "none":
        return None
    if kind == "exponential":
        return Exponential(_number(section[f"{prefix}_rate"]))
    if kind == "weibull":
        return Weibull(_number(section[f"{prefix}_shape"]), _number(section[f"{prefix}_scale"]))
    if kind == "weibull-mixture":
        comps = []
        for part in section[f"{prefix}_components"].split(","):
            w, k, lam = (_number(x) for x in part.split(":"))
            comps.append((w, k, lam))
        return WeibullMixture(tuple(comps))
    if kind == "uniform":
        return Uniform(_number(section[f"{prefix}_lo"]), _number(section[f"{prefix}_hi"]))
    raise ParseError(f"unknown {prefix}_dist {kind!r}")


def _dist_to_config(dist, prefix):
    if dist is None:
        return {f"{prefix}_dist": "none"}
    if isinstance(dist, Exponential):
        return {f"{prefix}_dist": "exponential", f"{prefix}_rate": _fmt(dist.rate)}
    if isinstance(dist, Weibull):
        return {
            f"{prefix}_dist": "weibull",
            f"{prefix}_shape": _fmt(dist.shape),
            f"{prefix}_scale": _fmt(dist.scale),
        }
    if isinstance(dist, WeibullMixture):
        comps = ",".join(
            f"{_fmt(w)}:{_fmt(k)}:{_fmt(lam)}" for w, k, lam in dist.components
        )
        return {f"{prefix}_dist": "weibull-mixture", f"{prefix}_components": comps}
    if isinstance(dist, Uniform):
        return {
            f"{prefix}_dist": "uniform",
            f"{prefix}_lo": _fmt(dist.lo),
            f"{prefix}_hi": _fmt(dist.hi),
        }
    raise ValueError(f"unknown distribution {dist!r}")


def parse_scenario_config(path, seed_override=None):
    """Read a [scenario] key-value config file into a scenario object.

    The ``kind`` key selects the scenario type: ``study-level``,
    ``meta-level`` or ``prop1``.  Numeric values accept fractions (``1/60``)
    and ``inf``.
    """
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ParseError(f"{path}: cannot read config file")
    if "scenario" not in parser:
        raise ParseError(f"{path}: missing [scenario] section")
    sec = parser["scenario"]
    kind = sec.get("kind", "").strip().lower()
    seed = int(seed_override if seed_override is not None else sec.get("seed", "0"))
    try:
        if kind == "study-level":
            return ScenarioConfig(
                event_dist=_dist_from_config(sec, "event"),
                censor_dist=_dist_from_config(sec, "censor"),
                n=int(sec["n"]),
                replications=int(sec["replications"]),
                seed=seed,
                admin_cutoff=_number(sec.get("admin_cutoff", "100")),
                ci_methods=tuple(
                    m.strip() for m in sec.get("ci_methods", ",".join(CI_METHODS)).split(",")
                ),
                alpha=_number(sec.get("alpha", "0.05")),
                bootstrap_replicates=int(sec.get("bootstrap_replicates", "1000")),
                true_se_reps=int(sec.get("true_se_reps", "100000")),
                scenario_id=sec.get("id", "scenario"),
            )
        if kind == "meta-level":
            true_pooled = sec.get("true_pooled", "").strip()
            return MetaScenarioConfig(
                outcome=sec["outcome"].strip().lower(),
                tau2=_number(sec["tau2"]),
                replications=int(sec["replications"]),
                seed=seed,
                n_studies=int(sec.get("n_studies", "20")),
                n_range=(int(sec.get("n_lo", "50")), int(sec.get("n_hi", "1000"))),
                base_rate=_number(sec.get("base_rate", "0.025")),
                heterogeneity_scale=sec.get("heterogeneity", "").strip().lower()
                or ("multiplicative" if sec["outcome"].strip().lower() == "ratio" else "additive"),
                admin_cutoff=_number(sec.get("admin_cutoff", "100")),
                alpha=_number(sec.get("alpha", "0.05")),
                bootstrap_replicates=int(sec.get("bootstrap_replicates", "1000")),
                benchmark_reps=int(sec.get("benchmark_reps", "1000")),
                true_pooled=_number(true_pooled) if true_pooled else None,
                scenario_id=sec.get("id", "meta-scenario"),
            )
        if kind == "prop1":
            return Prop1Config(
                event_dist=_dist_from_config(sec, "event"),
                censor_dist=_dist_from_config(sec, "censor"),
                n_grid=tuple(int(x) for x in sec["n_grid"].split(",")),
                replications=int(sec["replications"]),
                seed=seed,
                admin_cutoff=_number(sec.get("admin_cutoff", "inf")),
                alpha=_number(sec.get("alpha", "0.05")),
                transform=Transform(sec.get("transform", "identity").strip().lower()),
                target_oracle_reps=int(sec.get("target_oracle_reps", "10000")),
                scenario_id=sec.get("id", "prop1"),
            )
    except KeyError as exc:
        raise ParseError(f"{path}: missing config key {exc}") from None
    raise ParseError(f"{path}: kind must be study-level, meta-level or prop1, got {kind!r}")


def resolved_config(cfg):
    """Flat key=value view of a scenario object for output embedding."""
    out = {"kind": None, "id": cfg.scenario_id, "seed": cfg.seed, "alpha": _fmt(cfg.alpha)}
    if isinstance(cfg, ScenarioConfig):
        out["kind"] = "study-level"
        out.update(_dist_to_config(cfg.event_dist, "event"))
        out.update(_dist_to_config(cfg.censor_dist, "censor"))
        out.update(
            admin_cutoff=_fmt(cfg.admin_cutoff),
            n=cfg.n,
            replications=cfg.replications,
            ci_methods=",".join(cfg.ci_methods),
            bootstrap_replicates=cfg.bootstrap_replicates,
            true_se_reps=cfg.true_se_reps,
        )
    elif isinstance(cfg, MetaScenarioConfig):
        out["kind"] = "meta-level"
        out.update(
            outcome=cfg.outcome,
            tau2=_fmt(cfg.tau2),
            replications=cfg.replications,
            n_studies=cfg.n_studies,
            n_lo=cfg.n_range[0],
            n_hi=cfg.n_range[1],
            base_rate=_fmt(cfg.base_rate),
            heterogeneity=cfg.heterogeneity_scale,
            admin_cutoff=_fmt(cfg.admin_cutoff),
            bootstrap_replicates=cfg.bootstrap_replicates,
            benchmark_reps=cfg.benchmark_reps,
            true_pooled="" if cfg.true_pooled is None else _fmt(cfg.true_pooled),
        )
    elif isinstance(cfg, Prop1Config):
        out["kind"] = "prop1"
        out.update(_dist_to_config(cfg.event_dist, "event"))
        out.update(_dist_to_config(cfg.censor_dist, "censor"))
        out.update(
            admin_cutoff=_fmt(cfg.admin_cutoff),
            n_grid=",".join(str(n) for n in cfg.n_grid),
            replications=cfg.replications,
            transform=cfg.transform.value,
            target_oracle_reps=cfg.target_oracle_reps,
        )
    else:
        raise ValueError(f"unknown config object {cfg!r}")
    return out


# ---------------------------------------------------------------------------
# result emission


def _comment_lines(config, seed):
    lines = [f"# tool: mediansurv {__version__}"]
    lines.append(f"# seed: {'none' if seed is None else seed}")
    for key in sorted(config):
        lines.append(f"# config.{key}: {config[key]}")
    return lines


def write_table(path, header, rows, config, seed):
    """Write a CSV table with embedded tool/config/seed comment lines."""
    with open(path, "w", newline="") as fh:
        for line in _comment_lines(config, seed):
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _study_display(outcome, z):
    lo = outcome.estimate - z * outcome.se
    hi = outcome.estimate + z * outcome.se
    if outcome.scale == "log":
        disp = (math.exp(outcome.estimate), math.exp(lo), math.exp(hi))
    else:
        disp = (outcome.estimate, lo, hi)
    return lo, hi, disp


def emit_results(result, per_study, fmt, config=None, seed=None):
    """Render a pooled result plus per-study forest data as CSV or JSON text.

    Per-study rows carry the analysis-scale estimate and SE plus limits on
    the reporting scale (log-scale outcomes are exponentiated for display
    with the analysis values retained alongside).
    """
    config = config or {}
    z = normal_quantile(1.0 - result.alpha / 2.0)
    is_log = result.scale == "log"

    def display(x):
        if x is None:
            return None
        return math.exp(x) if is_log else x

    def display_pair(pair):
        return None if pair is None else tuple(display(v) for v in pair)

    if fmt.lower() == "json":
        doc = {
            "tool": "mediansurv",
            "version": __version__,
            "seed": seed,
            "config": {k: str(v) for k, v in sorted(config.items())},
            "model": result.model,
            "scale": result.scale,
            "alpha": _round10(result.alpha),
            "k_studies": result.k_studies,
            "flags": list(result.flags),
            "pooled": {
                "estimate": _round10(result.pooled),
                "se": _round10(result.pooled_se),
                "ci": _round10_pair(result.pooled_ci),
                "display_estimate": _round10(display(result.pooled)),
                "display_ci": _round10_pair(display_pair(result.pooled_ci)),
            },
            "tau2": {
                "estimate": _round10(result.tau2),
                "ci": _round10_pair(result.tau2_ci),
            },
            "q_statistic": _round10(result.q_statistic),
            "i2_percent": _round10(result.i2_percent),
            "prediction_interval": _round10_pair(result.prediction_interval),
            "display_prediction_interval": _round10_pair(display_pair(result.prediction_interval)),
            "studies": [],
        }
        for o in per_study:
            lo, hi, disp = _study_display(o, z)
            doc["studies"].append(
                {
                    "study_id": o.study_id,
                    "estimate": _round10(o.estimate),
                    "se": _round10(o.se),
                    "ci": [_round10(lo), _round10(hi)],
                    "display_estimate": _round10(disp[0]),
                    "display_ci": [_round10(disp[1]), _round10(disp[2])],
                }
            )
        return json.dumps(doc, indent=2) + "\n"

    header = [
        "record", "study_id", "estimate", "se", "ci_lower", "ci_upper",
        "display_estimate", "display_lower", "display_upper",
    ]
    rows = []
    for o in per_study:
        lo, hi, disp = _study_display(o, z)
        rows.append(["study", o.study_id, o.estimate, o.se, lo, hi, *disp])
    ci = result.pooled_ci or (None, None)
    rows.append([
        "pooled", "", result.pooled, result.pooled_se, ci[0], ci[1],
        display(result.pooled), display(ci[0]), display(ci[1]),
    ])
    t2ci = result.tau2_ci or (None, None)
    rows.append(["tau2", "", result.tau2, None, t2ci[0], t2ci[1], None, None, None])
    rows.append(["q_statistic", "", result.q_statistic, None, None, None, None, None, None])
    rows.append(["i2_percent", "", result.i2_percent, None, None, None, None, None, None])
    pi = result.prediction_interval or (None, None)
    rows.append([
        "prediction_interval", "", None, None, pi[0], pi[1],
        None, display(pi[0]), display(pi[1]),
    ])
    meta_cfg = dict(config)
    meta_cfg.update(model=result.model, scale=result.scale, k_studies=result.k_studies,
                    flags=";".join(result.flags))
    lines = _comment_lines(meta_cfg, seed)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def _round10_pair(pair):
    if pair is None:
        return None
    return [_round10(float(pair[0])), _round10(float(pair[1]))]


def write_study_echo(path, rows):
    """Write parsed study rows back out in the input schema (round-trips)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_STUDY_HEADER + ["level"])
        for r in rows:
            writer.writerow([
                r.study_id, r.arm, r.n, _fmt(float(r.median)),
                _fmt(None if r.ci_lower is None else float(r.ci_lower)),
                _fmt(None if r.ci_upper is None else float(r.ci_upper)),
                _fmt(float(r.level)),
            ])
