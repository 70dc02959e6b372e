"""Experiment orchestration: configuration, sweeps, metrics, and table IO.

Everything here is a pure function of (configuration, dataset, seeds) so
reruns reproduce results byte for byte.  File writing stays with the callers
(CLI); this module renders and parses the table formats.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from .agents import (
    DEFAULT_SOJOURN_BUCKETS,
    Hyperparams,
    PolicyVector,
    QTable,
    enumerate_naive,
    run_ucb_episode,
)
from .pareto import (
    OBJECTIVES,
    OutcomePoint,
    ParetoFront,
    average_suboptimality,
    pareto_front,
    range_metric,
)
from .simulator import (
    ACTION_NAMES,
    EpisodeOutcome,
    RolloutConfig,
    TraceRow,
    Weights,
    stage_name,
)
from .timeline import DefectTimeline

__all__ = [
    "ConfigError",
    "DataError",
    "ExperimentConfig",
    "PAPER_ROLLOUT",
    "PAPER_HYPER",
    "PAPER_THRESHOLD_AXIS",
    "DEFAULT_WEIGHTS_GRID",
    "DEFAULT_SEEDS",
    "load_config",
    "parse_config_text",
    "apply_overrides",
    "build_config",
    "expand_policy_grid",
    "run_enumerate",
    "run_sweep",
    "run_single_ucb",
    "compute_metrics",
    "build_plot_rows",
    "render_csv",
    "parse_points_csv",
    "naive_outcome_rows",
    "sweep_outcome_rows",
    "front_rows",
    "trace_rows",
    "qtable_rows",
    "render_metrics_table",
    "render_gnuplot_script",
]


class ConfigError(ValueError):
    """Bad configuration file, key, or value (usage error, exit code 1)."""


class DataError(ValueError):
    """Bad dataset or result file (data error, exit code 2)."""


# Reference experiment parameters: a 50-user internal team, one rollout stage
# at 10% of a 10,000-user base, ten time units to resolve a defect, and the
# published learner constants.
PAPER_ROLLOUT = RolloutConfig(n_dev=50, stage_users=(1000,), n_ops=10000, mttr=10.0)
PAPER_HYPER = Hyperparams(alpha=0.15, gamma=0.999999, c=0.15)

# 1 plus every multiple of 100 up to 10,000: 101 values per axis.
PAPER_THRESHOLD_AXIS = (1, *range(100, 10001, 100))

# Delivery-time weights sweeping (0,1).  Log-spaced at the low end: only
# near-zero weights produce the cautious, Dev-heavy end of the tradeoff
# curve, and a linear grid confined to [0.05, 0.95] barely widens the
# delivery-time span at all.
DEFAULT_WEIGHTS_GRID = (
    3e-05, 1e-04, 3e-04, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1,
    0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95,
)

DEFAULT_SEEDS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class ExperimentConfig:
    rollout: RolloutConfig = PAPER_ROLLOUT
    hyper: Hyperparams = PAPER_HYPER
    weights_grid: tuple[float, ...] = DEFAULT_WEIGHTS_GRID
    naive_axes: tuple[tuple[int, ...], ...] = (PAPER_THRESHOLD_AXIS, PAPER_THRESHOLD_AXIS)
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    bucket_boundaries: tuple[int, ...] = DEFAULT_SOJOURN_BUCKETS
    dataset: str = "sys1"
    workers: int = 1
    delivery_scale: float = 1.0
    downtime_scale: float = 1.0
    include_dominated: bool = False

    def __post_init__(self):
        if not self.weights_grid:
            raise ConfigError("weights_grid must be non-empty")
        for w in self.weights_grid:
            if not 0.0 < w < 1.0:
                raise ConfigError(f"weights must lie in (0,1) (got {w})")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if len(self.naive_axes) != self.rollout.num_stages + 1:
            raise ConfigError(
                f"naive grid needs {self.rollout.num_stages + 1} axes "
                f"(got {len(self.naive_axes)})"
            )
        for axis in self.naive_axes:
            if not axis:
                raise ConfigError("naive grid axes must be non-empty")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


# ---------------------------------------------------------------------------
# configuration file handling


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blanks ignored."""
    out: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {line_no}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def apply_overrides(mapping: dict[str, str], overrides: Sequence[str]) -> dict[str, str]:
    """Apply ``--set key=value`` strings on top of a parsed config."""
    merged = dict(mapping)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        merged[key.strip()] = value.strip()
    return merged


def _parse_int_list(value: str, key: str) -> tuple[int, ...]:
    try:
        return tuple(int(v.strip()) for v in value.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated integers, got {value!r}") from None


def _parse_float_list(value: str, key: str) -> tuple[float, ...]:
    try:
        return tuple(float(v.strip()) for v in value.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {value!r}") from None


def _parse_bool(value: str, key: str) -> bool:
    low = value.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


_KNOWN_KEYS = {
    "dataset", "n_dev", "stage_users", "n_ops", "mttr",
    "alpha", "gamma", "ucb_c", "sojourn_buckets",
    "weights_grid", "naive_grid", "seeds", "workers",
    "delivery_scale", "downtime_scale", "include_dominated",
}


def build_config(mapping: dict[str, str]) -> ExperimentConfig:
    """Typed configuration from string key-values; defaults fill the gaps."""
    unknown = set(mapping) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    g = mapping.get
    try:
        rollout = RolloutConfig(
            n_dev=int(g("n_dev", PAPER_ROLLOUT.n_dev)),
            stage_users=(
                _parse_int_list(mapping["stage_users"], "stage_users")
                if "stage_users" in mapping
                else PAPER_ROLLOUT.stage_users
            ),
            n_ops=int(g("n_ops", PAPER_ROLLOUT.n_ops)),
            mttr=float(g("mttr", PAPER_ROLLOUT.mttr)),
        )
        hyper = Hyperparams(
            alpha=float(g("alpha", PAPER_HYPER.alpha)),
            gamma=float(g("gamma", PAPER_HYPER.gamma)),
            c=float(g("ucb_c", PAPER_HYPER.c)),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    if "weights_grid" in mapping and mapping["weights_grid"] != "default":
        weights_grid = _parse_float_list(mapping["weights_grid"], "weights_grid")
    else:
        weights_grid = DEFAULT_WEIGHTS_GRID

    if "naive_grid" in mapping and mapping["naive_grid"] != "paper":
        axes = tuple(
            _parse_int_list(axis, "naive_grid")
            for axis in mapping["naive_grid"].split(";")
        )
    else:
        axes = tuple(PAPER_THRESHOLD_AXIS for _ in range(rollout.num_stages + 1))

    try:
        return ExperimentConfig(
            rollout=rollout,
            hyper=hyper,
            weights_grid=weights_grid,
            naive_axes=axes,
            seeds=(
                _parse_int_list(mapping["seeds"], "seeds")
                if "seeds" in mapping
                else DEFAULT_SEEDS
            ),
            bucket_boundaries=(
                _parse_int_list(mapping["sojourn_buckets"], "sojourn_buckets")
                if "sojourn_buckets" in mapping
                else DEFAULT_SOJOURN_BUCKETS
            ),
            dataset=g("dataset", "sys1"),
            workers=int(g("workers", 1)),
            delivery_scale=float(g("delivery_scale", 1.0)),
            downtime_scale=float(g("downtime_scale", 1.0)),
            include_dominated=(
                _parse_bool(mapping["include_dominated"], "include_dominated")
                if "include_dominated" in mapping
                else False
            ),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: Optional[str], overrides: Sequence[str] = ()) -> ExperimentConfig:
    mapping: dict[str, str] = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {path}")
        mapping = parse_config_text(p.read_text(encoding="utf-8"))
    mapping = apply_overrides(mapping, overrides)
    return build_config(mapping)


# ---------------------------------------------------------------------------
# experiment runs


def expand_policy_grid(axes: Sequence[Sequence[int]]) -> list[PolicyVector]:
    """Cross product of per-stage threshold values, first axis varying slowest."""
    return [PolicyVector(combo) for combo in itertools.product(*axes)]


def run_enumerate(
    config: ExperimentConfig, timeline: DefectTimeline
) -> tuple[list[tuple[PolicyVector, EpisodeOutcome]], ParetoFront]:
    grid = expand_policy_grid(config.naive_axes)
    results = enumerate_naive(config.rollout, timeline, grid, workers=config.workers)
    points = [outcome_point(o) for _, o in results]
    return results, pareto_front(points)


@dataclass(frozen=True)
class SweepRun:
    w0: float
    seed: int
    outcome: EpisodeOutcome


def _sweep_one(args) -> EpisodeOutcome:
    config, timeline, w0, seed = args
    weights = Weights(
        w_delivery=w0,
        delivery_scale=config.delivery_scale,
        downtime_scale=config.downtime_scale,
    )
    params = replace(config.hyper, seed=seed)
    outcome, _, _ = run_ucb_episode(
        config.rollout,
        timeline,
        weights,
        params,
        bucket_boundaries=config.bucket_boundaries,
        label=f"w0={w0!r}/seed={seed}",
        collect_trace=False,
    )
    return outcome


def run_sweep(
    config: ExperimentConfig, timeline: DefectTimeline
) -> tuple[list[SweepRun], ParetoFront]:
    """One learning episode per (weight, seed), in grid-then-seed order."""
    tasks = [
        (config, timeline, w0, seed)
        for w0 in config.weights_grid
        for seed in config.seeds
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_sweep_one, tasks, chunksize=1))
    else:
        outcomes = [_sweep_one(t) for t in tasks]
    runs = [
        SweepRun(w0, seed, outcome)
        for ((_, _, w0, seed), outcome) in zip(tasks, outcomes)
    ]
    front = pareto_front([outcome_point(r.outcome) for r in runs])
    return runs, front


def run_single_ucb(
    config: ExperimentConfig, timeline: DefectTimeline, w0: float, seed: int
) -> tuple[EpisodeOutcome, QTable, list[TraceRow]]:
    """One fully-traced learning episode (for inspection/export)."""
    weights = Weights(
        w_delivery=w0,
        delivery_scale=config.delivery_scale,
        downtime_scale=config.downtime_scale,
    )
    params = replace(config.hyper, seed=seed)
    return run_ucb_episode(
        config.rollout,
        timeline,
        weights,
        params,
        bucket_boundaries=config.bucket_boundaries,
        label=f"w0={w0!r}/seed={seed}",
        collect_trace=True,
    )


def outcome_point(outcome: EpisodeOutcome) -> OutcomePoint:
    return OutcomePoint(
        downtime=outcome.downtime,
        delivery_time=float(outcome.delivery_time),
        label=outcome.policy_label,
    )


# ---------------------------------------------------------------------------
# metrics


def compute_metrics(
    approach_points: Sequence[OutcomePoint],
    naive_points: Sequence[OutcomePoint],
    include_dominated: bool = False,
) -> dict:
    """Range and average suboptimality of an approach against the baseline.

    ``range`` spans all of the approach's outcomes; ``range_front`` only its
    non-dominated ones (both normalized by the span of all naive outcomes).
    Suboptimality averages over the approach's front points unless
    ``include_dominated`` is set.
    """
    if not approach_points:
        raise DataError("approach point set is empty")
    if not naive_points:
        raise DataError("naive point set is empty")
    naive_front = pareto_front(naive_points)
    approach_front = pareto_front(approach_points)
    subopt_basis = list(approach_points) if include_dominated else list(approach_front)
    result: dict = {}
    for objective in OBJECTIVES:
        try:
            rng_all = range_metric(approach_points, naive_points, objective)
            rng_front = range_metric(approach_front.points, naive_points, objective)
            summary = average_suboptimality(subopt_basis, naive_front, objective)
        except ValueError as exc:
            raise DataError(f"{objective}: {exc}") from None
        result[objective] = {
            "range": rng_all,
            "range_front": rng_front,
            "avg_suboptimality": summary.mean,
            "n_points": summary.n_points,
            "n_excluded": summary.n_excluded,
        }
    result["meta"] = {
        "approach_points": len(approach_points),
        "approach_front_points": len(approach_front),
        "naive_points": len(naive_points),
        "naive_front_points": len(naive_front),
        "include_dominated": include_dominated,
    }
    return result


def render_metrics_table(metrics: dict) -> str:
    lines = [
        f"{'objective':<14} {'range':>8} {'range(front)':>13} {'avg subopt':>11} "
        f"{'points':>7} {'excluded':>9}"
    ]
    for objective in OBJECTIVES:
        m = metrics[objective]
        lines.append(
            f"{objective:<14} {m['range']:>8.4f} {m['range_front']:>13.4f} "
            f"{m['avg_suboptimality']:>11.4f} {m['n_points']:>7d} {m['n_excluded']:>9d}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# tables (CSV rendering and parsing)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def render_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def naive_outcome_rows(
    results: Sequence[tuple[PolicyVector, EpisodeOutcome]]
) -> tuple[list[str], list[tuple]]:
    header = ["policy", "downtime", "delivery_time"]
    rows = [
        (policy.label, outcome.downtime, outcome.delivery_time)
        for policy, outcome in results
    ]
    return header, rows


def sweep_outcome_rows(runs: Sequence[SweepRun]) -> tuple[list[str], list[tuple]]:
    header = ["w0", "seed", "downtime", "delivery_time"]
    rows = [(r.w0, r.seed, r.outcome.downtime, r.outcome.delivery_time) for r in runs]
    return header, rows


def front_rows(front: ParetoFront) -> tuple[list[str], list[tuple]]:
    header = ["label", "downtime", "delivery_time"]
    rows = [(p.label, p.downtime, p.delivery_time) for p in front]
    return header, rows


def trace_rows(
    trace: Sequence[TraceRow], num_stages: int
) -> tuple[list[str], list[tuple]]:
    header = [
        "step", "stage", "action", "exposure", "defects_found",
        "failure", "delta_downtime", "reward",
    ]
    rows = [
        (
            t.step,
            stage_name(t.stage, num_stages),
            ACTION_NAMES[t.action],
            t.exposure,
            t.defects_found,
            t.failure,
            t.delta_downtime,
            t.reward,
        )
        for t in trace
    ]
    return header, rows


def qtable_rows(qtable: QTable, num_stages: int) -> tuple[list[str], list[tuple]]:
    header = ["stage", "bucket", "action", "q", "visits"]
    rows = [
        (stage_name(stage, num_stages), bucket, ACTION_NAMES[action], q, n)
        for stage, bucket, action, q, n in qtable.rows()
    ]
    return header, rows


def parse_points_csv(text: str, source: str = "<csv>") -> list[OutcomePoint]:
    """Read outcome points from any of this package's outcome/front tables.

    Requires ``downtime`` and ``delivery_time`` columns; every other column
    is folded into the label.  Raises :class:`DataError` naming the offending
    row on malformed input.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"{source}: empty table")
    header = [h.strip() for h in lines[0].split(",")]
    try:
        di = header.index("downtime")
        ti = header.index("delivery_time")
    except ValueError:
        raise DataError(
            f"{source}: header must contain downtime and delivery_time "
            f"(got {header})"
        ) from None
    label_idx = [i for i in range(len(header)) if i not in (di, ti)]
    points: list[OutcomePoint] = []
    for row_no, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise DataError(
                f"{source}: row {row_no}: expected {len(header)} fields, got {len(parts)}"
            )
        try:
            downtime = float(parts[di])
            delivery = float(parts[ti])
        except ValueError:
            raise DataError(f"{source}: row {row_no}: non-numeric objective value") from None
        label = "/".join(parts[i] for i in label_idx)
        try:
            points.append(OutcomePoint(downtime, delivery, label))
        except ValueError as exc:
            raise DataError(f"{source}: row {row_no}: {exc}") from None
    if not points:
        raise DataError(f"{source}: no data rows")
    return points


def build_plot_rows(
    series: dict[str, Sequence[OutcomePoint]]
) -> tuple[list[str], list[tuple]]:
    """Tidy (series, downtime, delivery_time) rows, series in given order."""
    header = ["series", "downtime", "delivery_time"]
    rows = [
        (name, p.downtime, p.delivery_time)
        for name, points in series.items()
        for p in points
    ]
    return header, rows


def render_gnuplot_script(
    series_names: Sequence[str], csv_name: str = "plot_data.csv"
) -> str:
    """Companion gnuplot script plotting each series of the tidy table."""
    lines = [
        "set datafile separator ','",
        "set xlabel 'downtime'",
        "set ylabel 'delivery time'",
        "set logscale y",
        "set key outside",
    ]
    clauses = [
        f"'{csv_name}' using (strcol(1) eq '{name}' ? $2 : NaN):3 "
        f"with points title '{name}'"
        for name in series_names
    ]
    lines.append("plot " + ", \\\n     ".join(clauses))
    return "\n".join(lines) + "\n"
