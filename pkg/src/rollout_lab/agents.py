"""Decision engines over the rollout environment.

Three families: tabular Q-learning with upper-confidence-bound exploration
(learned online, one pass over the timeline), fixed sojourn-threshold
policies, and exhaustive enumeration of threshold policies as the baseline.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .simulator import (
    ADVANCE,
    DEV,
    STAY,
    EnvState,
    EpisodeOutcome,
    RolloutConfig,
    TraceRow,
    Weights,
    reset,
    scalarized_reward,
    step_in_place,
)
from .timeline import DefectTimeline

__all__ = [
    "ACTIONS",
    "DEFAULT_SOJOURN_BUCKETS",
    "Hyperparams",
    "QTable",
    "PolicyVector",
    "sojourn_bucket",
    "state_key",
    "q_update",
    "ucb_select",
    "run_ucb_episode",
    "run_policy_episode",
    "run_threshold_episode",
    "enumerate_naive",
]

ACTIONS = (STAY, ADVANCE)

# Exponential sojourn buckets: early steps in a stage are where the defect
# rate information lives, so resolution is concentrated there.  The last
# bucket is open-ended.
DEFAULT_SOJOURN_BUCKETS = (1, 2, 4, 8, 16, 32, 64, 128, 256)


@dataclass(frozen=True)
class Hyperparams:
    """Q-learning and exploration constants.

    ``c == 0`` is allowed and degenerates UCB selection to the greedy argmax.
    """

    alpha: float
    gamma: float
    c: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0,1) (got {self.alpha})")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0,1) (got {self.gamma})")
        if self.c < 0.0:
            raise ValueError(f"c must be >= 0 (got {self.c})")


def sojourn_bucket(sojourn: int, boundaries: Sequence[int] = DEFAULT_SOJOURN_BUCKETS) -> int:
    """Bucket index of a sojourn count; values past the last boundary share
    the open-ended top bucket."""
    return bisect_right(boundaries, sojourn)


def state_key(
    state: EnvState, boundaries: Sequence[int] = DEFAULT_SOJOURN_BUCKETS
) -> tuple[int, int]:
    """Observable agent state: (stage, bucketized failure-free sojourn)."""
    return (state.stage, bisect_right(boundaries, state.sojourn_clock))


class QTable:
    """State-action value estimates with visit counts.

    Unvisited entries read as ``Q = 0`` (optimistic, since all rewards are
    non-positive) with zero visits.  ``global_step`` counts updates performed
    and is the ``t`` of the exploration bonus.
    """

    __slots__ = ("entries", "global_step")

    def __init__(self):
        self.entries: dict[tuple, list] = {}  # (key, action) -> [q, visits]
        self.global_step: int = 0

    def q(self, key, action) -> float:
        e = self.entries.get((key, action))
        return e[0] if e is not None else 0.0

    def visits(self, key, action) -> int:
        e = self.entries.get((key, action))
        return e[1] if e is not None else 0

    def max_q(self, key, actions: Sequence[int] = ACTIONS) -> float:
        return max(self.q(key, a) for a in actions)

    def rows(self) -> list[tuple]:
        """(stage, bucket, action, q, visits) rows, deterministically sorted."""
        out = []
        for ((stage, bucket), action), (q, n) in self.entries.items():
            out.append((stage, bucket, action, q, n))
        out.sort(key=lambda r: (r[0], r[1], r[2]))
        return out


def q_update(
    qtable: QTable,
    s,
    a: int,
    r: float,
    s_next,
    params: Hyperparams,
    actions_next: Sequence[int] = ACTIONS,
    terminal: bool = False,
) -> QTable:
    """One-step temporal-difference update of ``Q(s, a)``.

    ``Q += alpha * (r + gamma * max_a' Q(s_next, a') - Q)`` where the max
    runs over the actions available in the next state.  Terminal transitions
    have no future, so their bootstrap term is dropped.  Mutates and returns
    the table; the visit count of ``(s, a)`` and the global step advance by
    one.
    """
    if not math.isfinite(r):
        raise ValueError(f"reward must be finite (got {r})")
    entry = qtable.entries.get((s, a))
    if entry is None:
        entry = [0.0, 0]
        qtable.entries[(s, a)] = entry
    if terminal:
        target = r
    else:
        target = r + params.gamma * qtable.max_q(s_next, actions_next)
    entry[0] += params.alpha * (target - entry[0])
    entry[1] += 1
    qtable.global_step += 1
    return qtable


def ucb_select(
    qtable: QTable,
    s,
    actions: Sequence[int],
    params: Hyperparams,
    rng: Optional[np.random.Generator] = None,
) -> int:
    """Pick the action maximizing ``Q + c * sqrt(log((t+1) / n))``.

    Never-taken actions have an infinite bonus and win over any visited one.
    Exact score ties are broken uniformly at random from ``rng`` (a fresh
    generator seeded from ``params.seed`` if none is supplied; episode
    runners pass one persistent generator so tie-breaks do not repeat).
    """
    if not actions:
        raise ValueError("actions must be non-empty")
    if rng is None:
        rng = np.random.default_rng(params.seed)
    entries = qtable.entries
    unvisited = [a for a in actions if (s, a) not in entries or entries[(s, a)][1] == 0]
    if unvisited:
        if len(unvisited) == 1:
            return unvisited[0]
        return unvisited[int(rng.integers(len(unvisited)))]
    t1 = qtable.global_step + 1
    c = params.c
    best_score = -math.inf
    best: list[int] = []
    for a in actions:
        q, n = entries[(s, a)]
        # the visit-count semantics keep n <= t; the clamp is defensive
        score = q + c * math.sqrt(max(0.0, math.log(t1 / n)))
        if score > best_score:
            best_score = score
            best = [a]
        elif score == best_score:
            best.append(a)
    if len(best) == 1:
        return best[0]
    return best[int(rng.integers(len(best)))]


def run_ucb_episode(
    config: RolloutConfig,
    timeline: DefectTimeline,
    weights: Weights,
    params: Hyperparams,
    bucket_boundaries: Sequence[int] = DEFAULT_SOJOURN_BUCKETS,
    label: str = "",
    collect_trace: bool = True,
    max_steps: Optional[int] = None,
) -> tuple[EpisodeOutcome, QTable, list[TraceRow]]:
    """Run one online-learning episode to delivery.

    The learner sees each defect exactly when the simulation exposes it; there
    is no separate training pass.  Fully deterministic given the inputs and
    ``params.seed``.
    """
    env = reset(config, timeline)
    qtable = QTable()
    rng = np.random.default_rng(params.seed)
    boundaries = tuple(bucket_boundaries)
    ops = config.ops_stage
    only_stay = (STAY,)
    trace: list[TraceRow] = []
    failures: Counter = Counter()
    delivery_steps = 0

    while not env.delivered:
        if max_steps is not None and env.wall_clock >= max_steps:
            raise RuntimeError(
                f"episode exceeded {max_steps} steps "
                f"(stage={env.stage}, defects={env.defects_found}/{timeline.count})"
            )
        s = (env.stage, bisect_right(boundaries, env.sojourn_clock))
        acts = only_stay if env.stage == ops else ACTIONS
        a = ucb_select(qtable, s, acts, params, rng)
        out = step_in_place(env, a, config, timeline)
        r = scalarized_reward(out, weights)
        s_next = (env.stage, bisect_right(boundaries, env.sojourn_clock))
        acts_next = only_stay if env.stage == ops else ACTIONS
        q_update(qtable, s, a, r, s_next, params, acts_next, terminal=out.terminal)
        delivery_steps += out.delta_delivery
        if out.failure_occurred:
            failures[out.failure_stage] += 1
        if collect_trace:
            ran_in = out.failure_stage if out.failure_occurred else env.stage
            trace.append(
                TraceRow(
                    env.wall_clock,
                    ran_in,
                    a,
                    env.exposure,
                    env.defects_found,
                    out.failure_occurred,
                    out.delta_downtime,
                    r,
                )
            )

    outcome = EpisodeOutcome(env.downtime_acc, delivery_steps, dict(failures), label)
    return outcome, qtable, trace


@dataclass(frozen=True)
class PolicyVector:
    """Failure-free sojourn thresholds, one per pre-Ops stage.

    ``thresholds[0]`` is the Dev threshold; with ``m`` rollout stages the
    vector has ``m + 1`` entries.  The policy advances whenever the sojourn
    clock has reached the current stage's threshold.
    """

    thresholds: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(int(t) for t in self.thresholds))
        if not self.thresholds:
            raise ValueError("at least one threshold is required")
        for t in self.thresholds:
            if t < 1:
                raise ValueError(f"thresholds must be >= 1 (got {self.thresholds})")

    @property
    def t_dev_to_i1(self) -> int:
        return self.thresholds[0]

    @property
    def t_i1_to_ops(self) -> int:
        return self.thresholds[-1]

    @property
    def label(self) -> str:
        return "t=" + "/".join(str(t) for t in self.thresholds)


def run_policy_episode(
    config: RolloutConfig,
    timeline: DefectTimeline,
    decide: Callable[[EnvState], int],
    label: str = "",
    weights: Optional[Weights] = None,
    collect_trace: bool = False,
) -> tuple[EpisodeOutcome, list[TraceRow]]:
    """Step-by-step episode under an arbitrary deterministic policy.

    This is the reference execution path; the event-jump engine in
    :func:`run_threshold_episode` must agree with it exactly.
    """
    env = reset(config, timeline)
    trace: list[TraceRow] = []
    failures: Counter = Counter()
    delivery_steps = 0
    while not env.delivered:
        a = decide(env)
        out = step_in_place(env, a, config, timeline)
        delivery_steps += out.delta_delivery
        if out.failure_occurred:
            failures[out.failure_stage] += 1
        if collect_trace:
            ran_in = out.failure_stage if out.failure_occurred else env.stage
            r = scalarized_reward(out, weights) if weights is not None else None
            trace.append(
                TraceRow(
                    env.wall_clock,
                    ran_in,
                    a,
                    env.exposure,
                    env.defects_found,
                    out.failure_occurred,
                    out.delta_downtime,
                    r,
                )
            )
    return EpisodeOutcome(env.downtime_acc, delivery_steps, dict(failures), label), trace


def threshold_decider(config: RolloutConfig, policy: PolicyVector) -> Callable[[EnvState], int]:
    if len(policy.thresholds) != config.num_stages + 1:
        raise ValueError(
            f"policy has {len(policy.thresholds)} thresholds, config needs "
            f"{config.num_stages + 1}"
        )
    thresholds = policy.thresholds
    ops = config.ops_stage

    def decide(state: EnvState) -> int:
        if state.stage == ops:
            return STAY
        return ADVANCE if state.sojourn_clock >= thresholds[state.stage] else STAY

    return decide


def _crossing_step(anchor: float, rate: float, target: float) -> int:
    """Smallest j >= 1 with ``anchor + j*rate >= target`` in float arithmetic.

    The analytic estimate is corrected by direct evaluation so the result is
    bit-identical to what the per-step engine observes.
    """
    j = max(1, math.ceil((target - anchor) / rate))
    while j > 1 and anchor + (j - 1) * rate >= target:
        j -= 1
    while anchor + j * rate < target:
        j += 1
    return j


def run_threshold_episode(
    config: RolloutConfig,
    timeline: DefectTimeline,
    policy: PolicyVector,
    label: Optional[str] = None,
) -> EpisodeOutcome:
    """Deterministic threshold-policy episode via event jumping.

    Instead of iterating wall-clock steps, jumps from failure to failure:
    after any failure the climb back through the stages is a fixed schedule
    (each pre-Ops stage holds exactly its threshold's worth of steps), so the
    step index that crosses the next defect is computed directly.  Produces
    exactly the same outcome as stepping the environment.
    """
    if label is None:
        label = policy.label
    if len(policy.thresholds) != config.num_stages + 1:
        raise ValueError(
            f"policy has {len(policy.thresholds)} thresholds, config needs "
            f"{config.num_stages + 1}"
        )
    thresholds = policy.thresholds
    rates = config.accelerations
    fractions = config.exposed_fractions
    mttr = config.mttr
    ops = config.ops_stage
    times = timeline.times
    n = len(times)

    exposure = 0.0
    k = 0
    steps = 0
    downtime = 0.0
    failures: Counter = Counter()

    while k < n:
        target = times[k]
        # climb from a fresh Dev entry; each pre-Ops segment is bounded
        for stage in range(0, ops):
            cap = thresholds[stage]
            rate = rates[stage]
            if exposure + cap * rate >= target:
                j = _crossing_step(exposure, rate, target)
                steps += j
                exposure = target
                break
            steps += cap
            exposure = exposure + cap * rate
        else:
            # reached Ops without crossing; the defect is hit there
            stage = ops
            j = _crossing_step(exposure, rates[ops], target)
            steps += j
            exposure = target
        k += 1
        failures[stage] += 1
        if stage != DEV:
            downtime += fractions[stage] * mttr

    # timeline exhausted: one full failure-free climb, then the advancing
    # step into Ops terminates the episode and costs no delivery time
    steps += sum(thresholds)
    return EpisodeOutcome(downtime, steps, dict(failures), label)


def enumerate_naive(
    config: RolloutConfig,
    timeline: DefectTimeline,
    grid: Sequence[PolicyVector],
    workers: int = 1,
) -> list[tuple[PolicyVector, EpisodeOutcome]]:
    """Run every policy in ``grid`` independently, preserving grid order.

    Episodes share nothing, so ``workers > 1`` fans out across processes and
    returns the identical list.
    """
    if not grid:
        raise ValueError("policy grid must be non-empty")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(
                pool.map(
                    run_threshold_episode,
                    [config] * len(grid),
                    [timeline] * len(grid),
                    grid,
                    chunksize=max(1, len(grid) // (workers * 8)),
                )
            )
        return list(zip(list(grid), outcomes))
    return [(p, run_threshold_episode(config, timeline, p)) for p in grid]
