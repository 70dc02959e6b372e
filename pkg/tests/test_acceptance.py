"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s``.  The SYS1 reproduction
(criterion 5) drives the full shipped pipeline through the CLI and is also
the timing budget check.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from rollout_lab.agents import (
    ACTIONS,
    Hyperparams,
    PolicyVector,
    QTable,
    run_policy_episode,
    run_threshold_episode,
    threshold_decider,
    ucb_select,
    q_update,
)
from rollout_lab.cli import main
from rollout_lab.pareto import OutcomePoint, pareto_front, range_metric, average_suboptimality
from rollout_lab.simulator import DEV, STAY, ADVANCE
from rollout_lab.timeline import DefectTimeline, generate_nhpp_timeline

from conftest import random_rollout_config, random_timeline


def ok(message: str):
    print(f"PASS {message}")


# -- criterion 1: formula fidelity -----------------------------------------


def test_c1a_q_update_matches_equation_on_random_tuples():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(10_000):
        q0 = float(rng.normal(scale=100))
        qn1 = float(rng.normal(scale=100))
        qn2 = float(rng.normal(scale=100))
        r = float(rng.normal(scale=20))
        alpha = float(rng.uniform(1e-6, 1 - 1e-6))
        gamma = float(rng.uniform(1e-6, 1 - 1e-6))
        table = QTable()
        table.entries[("s", STAY)] = [q0, 1]
        table.entries[("n", STAY)] = [qn1, 1]
        table.entries[("n", ADVANCE)] = [qn2, 1]
        q_update(table, "s", STAY, r, "n", Hyperparams(alpha, gamma, 0.1))
        # independent one-line evaluation of the update equation
        expected = q0 + alpha * (r + gamma * max(qn1, qn2) - q0)
        worst = max(worst, abs(table.q("s", STAY) - expected))
    assert worst <= 1e-12
    ok(f"criterion 1a: q_update matches the update equation on 10,000 tuples (max err {worst:.2e})")


def _greedy_reference(table: QTable, key, actions, rng) -> int:
    """Independent greedy argmax with the same tie-break protocol."""
    best = -math.inf
    ties = []
    for a in actions:
        q = table.q(key, a)
        if q > best:
            best = q
            ties = [a]
        elif q == best:
            ties.append(a)
    if len(ties) == 1:
        return ties[0]
    return ties[int(rng.integers(len(ties)))]


def test_c1b_ucb_with_zero_c_is_greedy_argmax():
    rng = np.random.default_rng(202)
    hp = Hyperparams(alpha=0.5, gamma=0.5, c=0.0, seed=0)
    for i in range(1_000):
        table = QTable()
        # small integer-valued Qs so exact ties occur regularly
        for a in ACTIONS:
            table.entries[(("s",), a)] = [float(rng.integers(-3, 4)), int(rng.integers(1, 20))]
        table.global_step = sum(table.entries[(("s",), a)][1] for a in ACTIONS)
        seed = int(rng.integers(0, 2**31))
        got = ucb_select(table, ("s",), ACTIONS, hp, rng=np.random.default_rng(seed))
        want = _greedy_reference(table, ("s",), ACTIONS, np.random.default_rng(seed))
        assert got == want
    ok("criterion 1b: ucb_select(c=0) equals the greedy argmax on 1,000 random tables")


def test_c1c_downtime_accounting_identity():
    rng = np.random.default_rng(303)
    checked = 0
    for _ in range(100):
        cfg = random_rollout_config(rng)
        timeline = random_timeline(rng)
        thresholds = tuple(int(rng.integers(1, 30)) for _ in range(cfg.num_stages + 1))
        policy = PolicyVector(thresholds)
        outcome, trace = run_policy_episode(
            cfg, timeline, threshold_decider(cfg, policy), collect_trace=True
        )
        fractions = cfg.exposed_fractions
        replayed = 0.0
        for row in trace:
            if row.failure and row.stage != DEV:
                contribution = fractions[row.stage] * cfg.mttr
                assert contribution == row.delta_downtime
                replayed += contribution
        assert replayed == outcome.downtime
        # the event-jump engine must agree with the stepped episode
        fast = run_threshold_episode(cfg, timeline, policy)
        assert fast.downtime == outcome.downtime
        assert fast.delivery_time == outcome.delivery_time
        checked += 1
    assert checked == 100
    ok("criterion 1c: downtime == mttr * sum(p(stage)) replayed from 100 random traces, exact")


# -- criterion 2: Pareto correctness ----------------------------------------


def _vectorized_nondominated(coords: np.ndarray) -> set:
    """Brute-force O(n^2) pairwise domination via boolean matrices."""
    d, t = coords[:, 0], coords[:, 1]
    le_d = d[None, :] <= d[:, None]
    le_t = t[None, :] <= t[:, None]
    lt_any = (d[None, :] < d[:, None]) | (t[None, :] < t[:, None])
    dominated = (le_d & le_t & lt_any).any(axis=1)
    return {(float(a), float(b)) for a, b in coords[~dominated]}


def test_c2_pareto_front_matches_brute_force():
    rng = np.random.default_rng(404)
    start = time.monotonic()
    for i in range(100):
        n = int(rng.integers(1, 1001))
        if i % 2 == 0:
            coords = rng.uniform(0, 1000, size=(n, 2))
        else:
            coords = rng.integers(0, 40, size=(n, 2)).astype(float)
        points = [OutcomePoint(float(a), float(b)) for a, b in coords]
        front = pareto_front(points)
        got = {(p.downtime, p.delivery_time) for p in front}
        assert got == _vectorized_nondominated(coords)
    elapsed = time.monotonic() - start
    assert elapsed < 10.0
    ok(f"criterion 2: pareto_front == brute force on 100 sets (n<=1000) in {elapsed:.1f}s")


# -- criterion 3: metric identities ------------------------------------------


def test_c3_metric_identities():
    rng = np.random.default_rng(505)
    coords = rng.uniform(1.0, 500.0, size=(200, 2))
    points = [OutcomePoint(float(a), float(b)) for a, b in coords]
    front = pareto_front(points)
    for objective in ("downtime", "delivery_time"):
        assert range_metric(points, points, objective) == 1.0
        summary = average_suboptimality(list(front.points), front, objective)
        assert summary.mean == 1.0
        assert summary.n_excluded == 0
    ok("criterion 3: range(naive, naive) == 1.0 and avg suboptimality(front, front) == 1.0, exact")


# -- criterion 4: degenerate episodes ----------------------------------------


def test_c4_empty_timeline_threshold_episode(paper_config):
    empty = DefectTimeline(())
    for t1, t2 in [(1, 1), (3, 4), (100, 1), (7, 250)]:
        outcome = run_threshold_episode(paper_config, empty, PolicyVector((t1, t2)))
        assert outcome.downtime == 0.0
        assert outcome.delivery_time == t1 + t2
    ok("criterion 4: empty timeline gives downtime 0 and delivery time t1 + t2, exact")


# -- criterion 5: SYS1 reproduction -------------------------------------------


@pytest.fixture(scope="module")
def sys1_pipeline(tmp_path_factory):
    """Full shipped pipeline through the CLI, timed."""
    out = tmp_path_factory.mktemp("sys1_run")
    start = time.monotonic()
    assert main(["enumerate", "--out", str(out)]) == 0
    assert main(["sweep-ucb", "--out", str(out)]) == 0
    assert main(["metrics", "--out", str(out)]) == 0
    elapsed = time.monotonic() - start
    return out, elapsed


def _read_points(path: Path):
    from rollout_lab.experiment import parse_points_csv

    return parse_points_csv(path.read_text(encoding="utf-8"), source=str(path))


def test_c5a_naive_grid_structure(sys1_pipeline):
    out, _ = sys1_pipeline
    naive = _read_points(out / "naive_outcomes.csv")
    assert len(naive) == 101 * 101 == 10201
    ucb = _read_points(out / "ucb_outcomes.csv")
    naive_min = min(p.downtime for p in naive)
    ucb_min = min(p.downtime for p in ucb)
    assert naive_min == 0.0
    assert ucb_min > naive_min, "learned policies cannot reach the naive downtime floor"
    front = _read_points(out / "naive_front.csv")
    below_ucb = [p for p in front if p.downtime < ucb_min]
    assert below_ucb, "naive front must reach below the best learned downtime"
    spread = max(p.downtime for p in naive) - naive_min
    assert spread > 300, "naive enumeration should span a wide downtime range"
    ok(
        f"criterion 5a: 10,201 naive outcomes; front reaches downtime {naive_min:.0f} "
        f"< best UCB {ucb_min:.0f}; span {spread:.0f}"
    )


def test_c5b_metrics_in_reported_vicinity(sys1_pipeline):
    out, _ = sys1_pipeline
    metrics = json.loads((out / "metrics.json").read_text(encoding="utf-8"))
    ucb = _read_points(out / "ucb_outcomes.csv")
    assert len({p.label.split("/")[0] for p in ucb}) >= 19, "sweep must cover >= 19 weights"
    for objective in ("downtime", "delivery_time"):
        subopt = metrics[objective]["avg_suboptimality"]
        rng_ = metrics[objective]["range"]
        assert 1.0 <= subopt <= 5.6, f"{objective} avg suboptimality {subopt} outside [1.0, 5.6]"
        assert 0.4 <= rng_ <= 1.2, f"{objective} range {rng_} outside [0.4, 1.2]"
    ok(
        "criterion 5b: avg suboptimality ({:.2f}, {:.2f}) in [1.0, 5.6]; "
        "range ({:.2f}, {:.2f}) in [0.4, 1.2]".format(
            metrics["downtime"]["avg_suboptimality"],
            metrics["delivery_time"]["avg_suboptimality"],
            metrics["downtime"]["range"],
            metrics["delivery_time"]["range"],
        )
    )


def test_c5c_pipeline_under_ten_minutes(sys1_pipeline):
    _, elapsed = sys1_pipeline
    assert elapsed < 600.0
    ok(f"criterion 5c: enumerate + sweep + metrics completed in {elapsed:.1f}s (< 600s)")


def test_sweep_direction_heavier_delivery_weight_delivers_sooner(sys1_pipeline):
    # op example: rows near w0=1 beat rows near w0=0 on mean delivery time
    out, _ = sys1_pipeline
    rows = (out / "ucb_outcomes.csv").read_text(encoding="utf-8").splitlines()[1:]
    by_w0: dict = {}
    for row in rows:
        w0, _seed, _downtime, delivery = row.split(",")
        by_w0.setdefault(float(w0), []).append(float(delivery))
    lo, hi = min(by_w0), max(by_w0)
    mean_lo = sum(by_w0[lo]) / len(by_w0[lo])
    mean_hi = sum(by_w0[hi]) / len(by_w0[hi])
    assert mean_hi < mean_lo
    ok(
        f"sweep direction: mean delivery {mean_hi:.0f} at w0={hi} < "
        f"{mean_lo:.0f} at w0={lo}"
    )


# -- criterion 6: determinism --------------------------------------------------


def test_c6_commands_rerun_byte_identical(tmp_path):
    dataset = tmp_path / "data.txt"
    assert main([
        "gen-data", "--a", "40", "--b", "0.005", "--horizon", "2000",
        "--seed", "11", "--out-file", str(dataset),
    ]) == 0
    dataset2 = tmp_path / "data2.txt"
    main(["gen-data", "--a", "40", "--b", "0.005", "--horizon", "2000",
          "--seed", "11", "--out-file", str(dataset2)])
    assert dataset.read_bytes() == dataset2.read_bytes()

    flags = [
        "--dataset", str(dataset),
        "--set", "naive_grid=1,50,400;1,50,400",
        "--set", "weights_grid=0.01,0.5,0.9",
        "--set", "seeds=1,2",
    ]
    dirs = [tmp_path / "run1", tmp_path / "run2"]
    for d in dirs:
        assert main(["enumerate", *flags, "--out", str(d)]) == 0
        assert main(["sweep-ucb", *flags, "--out", str(d)]) == 0
        assert main(["metrics", "--out", str(d)]) == 0
        assert main(["plot-data", "--out", str(d)]) == 0
        assert main([
            "trace-ucb", "--dataset", str(dataset), "--w0", "0.5", "--seed", "1",
            "--out-file", str(d / "trace.csv"), "--qtable-file", str(d / "qtable.csv"),
        ]) == 0
    names = [
        "naive_outcomes.csv", "naive_front.csv", "ucb_outcomes.csv", "ucb_front.csv",
        "metrics.json", "plot_data.csv", "trace.csv", "qtable.csv",
    ]
    for name in names:
        a, b = dirs[0] / name, dirs[1] / name
        assert a.read_bytes() == b.read_bytes(), f"{name} differs between reruns"
    ok(f"criterion 6: {len(names)} output files byte-identical across command reruns")


# -- criterion 7: NHPP generator sanity -----------------------------------------


def test_c7_nhpp_mean_count_monte_carlo():
    a, b, horizon = 50.0, 0.01, 1000.0
    expected = a * -math.expm1(-b * horizon)
    counts = [generate_nhpp_timeline(a, b, horizon, seed=s).count for s in range(1000)]
    mean = sum(counts) / len(counts)
    se = math.sqrt(expected / len(counts))  # Poisson variance == mean
    assert abs(mean - expected) <= 3 * se, (
        f"mean {mean:.3f} vs expected {expected:.3f} (3 SE = {3 * se:.3f})"
    )
    ok(
        f"criterion 7: NHPP mean count {mean:.2f} within 3 SE "
        f"({3 * se:.2f}) of expectation {expected:.2f} over 1,000 seeds"
    )
