"""Command-line client for the rollout experiment service.

Commands mirror the service endpoints; the CLI reads the dataset and
configuration locally, sends compute to the service (in-process unless
``--server`` points at a running instance), and writes all output files.

Exit codes: 0 success, 1 usage/configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

import httpx

from .client import ServiceClient, ServiceError
from .experiment import (
    ConfigError,
    DataError,
    ExperimentConfig,
    load_config,
    parse_points_csv,
    render_csv,
    render_gnuplot_script,
    render_metrics_table,
)
from .pareto import OutcomePoint
from .timeline import (
    TimelineError,
    builtin_dataset_path,
    load_timeline,
)

USAGE_EXIT = 1
DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; this tool reserves 2 for data
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _add_server(p: argparse.ArgumentParser):
    p.add_argument("--server", help="base URL of a running service (default: in-process)")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )
    _add_server(p)


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--dataset", help="failure-time file, or a builtin name like 'sys1'")
    p.add_argument("--out", default="results", help="output directory (default: results)")
    p.add_argument("--seed", help="comma-separated RNG seeds (overrides config)")
    p.add_argument("--workers", type=int, help="parallel workers (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rollout-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="run the naive threshold-policy grid")
    _add_common(p)
    _add_run_flags(p)

    p = sub.add_parser("sweep-ucb", help="run the learned-policy weight sweep")
    _add_common(p)
    _add_run_flags(p)

    p = sub.add_parser("metrics", help="range/suboptimality of a sweep vs the baseline")
    _add_common(p)
    p.add_argument("--ucb", help="approach outcomes CSV (default OUT/ucb_outcomes.csv)")
    p.add_argument("--naive", help="baseline outcomes CSV (default OUT/naive_outcomes.csv)")
    p.add_argument("--out", default="results", help="output directory (default: results)")
    p.add_argument(
        "--include-dominated",
        action="store_true",
        help="average suboptimality over all points, not just the front "
        "(also settable via the include_dominated config key)",
    )

    p = sub.add_parser("plot-data", help="emit one tidy CSV of all result series")
    _add_server(p)
    p.add_argument("--out", default="results", help="directory holding the result CSVs")
    p.add_argument(
        "--series",
        action="append",
        default=[],
        metavar="NAME=PATH",
        help="extra series to include (repeatable)",
    )
    p.add_argument("--gnuplot", action="store_true", help="also write plot.gp")

    p = sub.add_parser("gen-data", help="synthesize a decaying-rate failure timeline")
    _add_server(p)
    p.add_argument("--a", type=float, required=True, help="expected total defects")
    p.add_argument("--b", type=float, required=True, help="discovery-rate decay")
    p.add_argument("--horizon", type=float, required=True, help="exposure horizon")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-file", required=True, help="where to write the timeline")

    p = sub.add_parser("trace-ucb", help="trace one learning episode step by step")
    _add_common(p)
    p.add_argument("--dataset", help="failure-time file, or a builtin name like 'sys1'")
    p.add_argument("--w0", type=float, default=0.5, help="delivery-time weight")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-file", required=True, help="trace CSV path")
    p.add_argument("--qtable-file", help="also dump the learned Q table")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


# ---------------------------------------------------------------------------
# helpers


def _config_from_args(args) -> ExperimentConfig:
    overrides = list(args.overrides)
    if getattr(args, "seed", None) and args.command in ("enumerate", "sweep-ucb"):
        overrides.append(f"seeds={args.seed}")
    if getattr(args, "workers", None):
        overrides.append(f"workers={args.workers}")
    if getattr(args, "dataset", None):
        overrides.append(f"dataset={args.dataset}")
    return load_config(args.config, overrides)


def _load_times(config: ExperimentConfig) -> list[float]:
    name = config.dataset
    path = Path(name)
    if not path.exists():
        try:
            path = builtin_dataset_path(name)
        except FileNotFoundError:
            raise DataError(f"dataset not found: {name!r} (no such file or builtin)") from None
    try:
        return list(load_timeline(path).times)
    except TimelineError as exc:
        raise DataError(f"{path}: {exc}") from None


def _config_payload(config: ExperimentConfig) -> dict:
    return {
        "rollout": {
            "n_dev": config.rollout.n_dev,
            "stage_users": list(config.rollout.stage_users),
            "n_ops": config.rollout.n_ops,
            "mttr": config.rollout.mttr,
        },
        "hyper": {
            "alpha": config.hyper.alpha,
            "gamma": config.hyper.gamma,
            "c": config.hyper.c,
        },
        "weights_grid": list(config.weights_grid),
        "naive_axes": [list(a) for a in config.naive_axes],
        "seeds": list(config.seeds),
        "bucket_boundaries": list(config.bucket_boundaries),
        "workers": config.workers,
        "delivery_scale": config.delivery_scale,
        "downtime_scale": config.downtime_scale,
    }


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}")


def _front_csv(front_payload: list[dict]) -> str:
    header = ["label", "downtime", "delivery_time"]
    rows = [(p["label"], p["downtime"], p["delivery_time"]) for p in front_payload]
    return render_csv(header, rows)


# ---------------------------------------------------------------------------
# commands


def cmd_enumerate(args) -> int:
    config = _config_from_args(args)
    times = _load_times(config)
    client = ServiceClient(args.server)
    resp = client.post("/enumerate", {"times": times, "config": _config_payload(config)})
    out = Path(args.out)
    header = ["policy", "downtime", "delivery_time"]
    rows = [(o["policy"], o["downtime"], o["delivery_time"]) for o in resp["outcomes"]]
    _write(out / "naive_outcomes.csv", render_csv(header, rows))
    _write(out / "naive_front.csv", _front_csv(resp["front"]))
    print(f"{len(rows)} policies, {len(resp['front'])} on the front")
    return 0


def cmd_sweep_ucb(args) -> int:
    config = _config_from_args(args)
    times = _load_times(config)
    client = ServiceClient(args.server)
    resp = client.post("/sweep-ucb", {"times": times, "config": _config_payload(config)})
    out = Path(args.out)
    header = ["w0", "seed", "downtime", "delivery_time"]
    rows = [(o["w0"], o["seed"], o["downtime"], o["delivery_time"]) for o in resp["outcomes"]]
    _write(out / "ucb_outcomes.csv", render_csv(header, rows))
    _write(out / "ucb_front.csv", _front_csv(resp["front"]))
    print(f"{len(rows)} runs, {len(resp['front'])} on the front")
    return 0


def _read_points(path: Path) -> list[OutcomePoint]:
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    return parse_points_csv(path.read_text(encoding="utf-8"), source=str(path))


def cmd_metrics(args) -> int:
    config = load_config(args.config, args.overrides)
    include_dominated = bool(args.include_dominated) or config.include_dominated
    ucb_path = Path(args.ucb) if args.ucb else Path(args.out) / "ucb_outcomes.csv"
    naive_path = Path(args.naive) if args.naive else Path(args.out) / "naive_outcomes.csv"
    approach = _read_points(ucb_path)
    naive = _read_points(naive_path)
    client = ServiceClient(args.server)
    resp = client.post(
        "/metrics",
        {
            "approach": [asdict(p) for p in approach],
            "naive": [asdict(p) for p in naive],
            "include_dominated": include_dominated,
        },
    )
    _write(Path(args.out) / "metrics.json", json.dumps(resp, indent=2, sort_keys=True) + "\n")
    print(render_metrics_table(resp))
    return 0


def cmd_plot_data(args) -> int:
    out = Path(args.out)
    series: dict[str, list[OutcomePoint]] = {}
    defaults = [
        ("naive", out / "naive_outcomes.csv"),
        ("naive_front", out / "naive_front.csv"),
        ("ucb", out / "ucb_outcomes.csv"),
        ("ucb_front", out / "ucb_front.csv"),
    ]
    for name, path in defaults:
        if not path.exists():
            print(f"warning: missing {path}, skipping series {name!r}", file=sys.stderr)
            continue
        try:
            series[name] = _read_points(path)
        except DataError as exc:
            print(f"warning: {exc}, skipping series {name!r}", file=sys.stderr)
    for item in args.series:
        if "=" not in item:
            raise ConfigError(f"--series expects NAME=PATH, got {item!r}")
        name, path = item.split("=", 1)
        series[name.strip()] = _read_points(Path(path.strip()))
    if not series:
        raise DataError("no input series found; run enumerate/sweep-ucb first")
    client = ServiceClient(args.server)
    resp = client.post(
        "/plot-data",
        {"series": {name: [asdict(p) for p in pts] for name, pts in series.items()}},
    )
    header = ["series", "downtime", "delivery_time"]
    rows = [(r["series"], r["downtime"], r["delivery_time"]) for r in resp["rows"]]
    _write(out / "plot_data.csv", render_csv(header, rows))
    if args.gnuplot:
        _write(out / "plot.gp", render_gnuplot_script(list(series)))
    return 0


def cmd_gen_data(args) -> int:
    client = ServiceClient(args.server)
    resp = client.post(
        "/timeline/generate",
        {"a": args.a, "b": args.b, "horizon": args.horizon, "seed": args.seed},
    )
    lines = [
        f"# synthetic NHPP timeline: a={args.a!r} b={args.b!r} "
        f"horizon={args.horizon!r} seed={args.seed}",
    ]
    lines.extend(repr(t) for t in resp["times"])
    _write(Path(args.out_file), "\n".join(lines) + "\n")
    print(f"{resp['count']} defect times")
    return 0


def cmd_trace_ucb(args) -> int:
    overrides = list(args.overrides)
    if args.dataset:
        overrides.append(f"dataset={args.dataset}")
    config = load_config(args.config, overrides)
    times = _load_times(config)
    client = ServiceClient(args.server)
    resp = client.post(
        "/episode/ucb",
        {
            "times": times,
            "config": _config_payload(config),
            "w0": args.w0,
            "seed": args.seed,
        },
    )
    header = [
        "step", "stage", "action", "exposure", "defects_found",
        "failure", "delta_downtime", "reward",
    ]
    rows = [
        (
            t["step"], t["stage"], t["action"], t["exposure"], t["defects_found"],
            t["failure"], t["delta_downtime"], t["reward"],
        )
        for t in resp["trace"]
    ]
    _write(Path(args.out_file), render_csv(header, rows))
    if args.qtable_file:
        qheader = ["stage", "bucket", "action", "q", "visits"]
        qrows = [
            (r["stage"], r["bucket"], r["action"], r["q"], r["visits"])
            for r in resp["qtable"]
        ]
        _write(Path(args.qtable_file), render_csv(qheader, qrows))
    print(
        f"delivery_time={resp['delivery_time']} downtime={resp['downtime']!r} "
        f"steps={len(rows)}"
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "enumerate": cmd_enumerate,
    "sweep-ucb": cmd_sweep_ucb,
    "metrics": cmd_metrics,
    "plot-data": cmd_plot_data,
    "gen-data": cmd_gen_data,
    "trace-ucb": cmd_trace_ucb,
    "serve": cmd_serve,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (DataError, TimelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except ServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT if exc.status == 400 else USAGE_EXIT
    except httpx.ConnectError as exc:  # remote --server unreachable
        print(f"error: cannot reach service: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
