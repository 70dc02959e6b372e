"""Discrete-time staged-rollout environment.

The release process is a state machine: an internal testing stage (Dev), one
or more partial-rollout stages exposing growing user counts, and full
deployment (Ops).  Each wall-clock step the controller either stays or
advances one stage; defect exposure accrues at a rate proportional to the
users running the build, and crossing the next undiscovered defect time
forces a failure that returns the process to Dev.  Failures outside Dev cost
downtime proportional to the exposed user fraction times the mean time to
resolve.  The environment itself is fully deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .timeline import DefectTimeline

__all__ = [
    "DEV",
    "STAY",
    "ADVANCE",
    "ACTION_NAMES",
    "RolloutConfig",
    "Weights",
    "EnvState",
    "StepOutcome",
    "EpisodeOutcome",
    "TraceRow",
    "stage_name",
    "acceleration_factor",
    "exposed_fraction",
    "reset",
    "step",
    "step_in_place",
    "scalarized_reward",
]

DEV = 0          # stage index of the internal testing stage
STAY = 0
ADVANCE = 1
ACTION_NAMES = ("stay", "advance")


@dataclass(frozen=True)
class RolloutConfig:
    """Stage structure of the rollout: user counts per stage and repair cost.

    Stages are indexed ``0=Dev, 1..m`` for the partial-rollout stages, and
    ``m+1=Ops``.  User counts must grow strictly along that chain.
    """

    n_dev: int
    stage_users: tuple[int, ...]
    n_ops: int
    mttr: float

    def __post_init__(self):
        object.__setattr__(self, "stage_users", tuple(int(u) for u in self.stage_users))
        if len(self.stage_users) < 1:
            raise ValueError("at least one rollout stage is required")
        if self.n_dev < 1:
            raise ValueError(f"n_dev must be >= 1 (got {self.n_dev})")
        counts = (self.n_dev, *self.stage_users, self.n_ops)
        for a, b in zip(counts, counts[1:]):
            if b <= a:
                raise ValueError(
                    f"user counts must increase strictly Dev -> stages -> Ops (got {counts})"
                )
        if self.mttr < 0:
            raise ValueError(f"mttr must be >= 0 (got {self.mttr})")

    @property
    def num_stages(self) -> int:
        return len(self.stage_users)

    @property
    def ops_stage(self) -> int:
        return len(self.stage_users) + 1

    @property
    def user_counts(self) -> tuple[int, ...]:
        """Users per stage index, Dev through Ops."""
        return (self.n_dev, *self.stage_users, self.n_ops)

    @property
    def accelerations(self) -> tuple[float, ...]:
        """Exposure accrued per step in each stage (ratio of users to Dev)."""
        return tuple(u / self.n_dev for u in self.user_counts)

    @property
    def exposed_fractions(self) -> tuple[float, ...]:
        """Fraction of the full user base running the build, per stage."""
        return tuple(u / self.n_ops for u in self.user_counts)


def stage_name(stage: int, num_stages: int) -> str:
    if stage == DEV:
        return "Dev"
    if stage == num_stages + 1:
        return "Ops"
    if 1 <= stage <= num_stages:
        return f"i{stage}"
    raise ValueError(f"stage {stage} out of range for {num_stages} rollout stages")


def acceleration_factor(stage: int, config: RolloutConfig) -> float:
    """How much faster exposure accrues in ``stage`` than in Dev (Dev -> 1)."""
    return config.accelerations[stage]


def exposed_fraction(stage: int, config: RolloutConfig) -> float:
    """Fraction of the user base hit by a failure in ``stage`` (Ops -> 1)."""
    return config.exposed_fractions[stage]


@dataclass(frozen=True)
class Weights:
    """Objective weights for the scalarized reward.

    ``w_downtime`` is always ``1 - w_delivery``; both must lie in (0, 1).
    The optional scales multiply the raw per-step increments before
    weighting (both default to 1: no normalization between objectives).
    """

    w_delivery: float
    w_downtime: float = None  # type: ignore[assignment]
    delivery_scale: float = 1.0
    downtime_scale: float = 1.0

    def __post_init__(self):
        if self.w_downtime is None:
            object.__setattr__(self, "w_downtime", 1.0 - self.w_delivery)
        if not 0.0 < self.w_delivery < 1.0 or not 0.0 < self.w_downtime < 1.0:
            raise ValueError(
                f"weights must lie in (0,1) (got {self.w_delivery}, {self.w_downtime})"
            )
        if self.w_downtime != 1.0 - self.w_delivery:
            raise ValueError("w_downtime must equal 1 - w_delivery exactly")
        if self.delivery_scale <= 0 or self.downtime_scale <= 0:
            raise ValueError("objective scales must be positive")


@dataclass(slots=True)
class EnvState:
    """Mutable simulation state for one episode.

    ``entry_exposure`` is the exposure at the moment the current stage was
    entered (or the last failure); the engine maintains
    ``exposure == entry_exposure + sojourn_clock * acceleration(stage)``
    so exposure arithmetic is identical however the episode is replayed.
    """

    stage: int = DEV
    wall_clock: int = 0
    exposure: float = 0.0
    defects_found: int = 0
    sojourn_clock: int = 0
    downtime_acc: float = 0.0
    delivered: bool = False
    entry_exposure: float = 0.0

    def copy(self) -> "EnvState":
        return EnvState(
            self.stage,
            self.wall_clock,
            self.exposure,
            self.defects_found,
            self.sojourn_clock,
            self.downtime_acc,
            self.delivered,
            self.entry_exposure,
        )


class StepOutcome(NamedTuple):
    failure_occurred: bool
    failure_stage: Optional[int]
    delta_downtime: float
    delta_delivery: int
    terminal: bool


class TraceRow(NamedTuple):
    """One executed step: the stage is the one the step actually ran in."""

    step: int
    stage: int
    action: int
    exposure: float
    defects_found: int
    failure: bool
    delta_downtime: float
    reward: Optional[float]


def reset(config: RolloutConfig, timeline: DefectTimeline) -> EnvState:
    """Fresh episode state: in Dev with all counters at zero."""
    return EnvState()


def step_in_place(
    state: EnvState,
    action: int,
    config: RolloutConfig,
    timeline: DefectTimeline,
) -> StepOutcome:
    """Advance ``state`` by one wall-clock step, mutating it.

    The action applies at the start of the step: an advancing step accrues
    exposure at the new stage's rate.  At most one defect is crossed per
    step; the step truncates at the defect time and the process returns to
    Dev (failures in Dev stay in Dev and cost no downtime).  The episode
    terminates on the step that enters Ops with the timeline exhausted; that
    terminal step contributes no delivery time.
    """
    if state.delivered:
        raise RuntimeError("cannot step a delivered episode")
    ops = config.ops_stage
    stage = state.stage
    if action == ADVANCE and stage != ops:
        stage += 1
        anchor = state.exposure
        steps_here = 1
    else:
        anchor = state.entry_exposure
        steps_here = state.sojourn_clock + 1
    end = anchor + steps_here * config.accelerations[stage]

    state.wall_clock += 1
    k = state.defects_found
    times = timeline.times
    if k < len(times) and times[k] <= end:
        defect_time = times[k]
        state.exposure = defect_time
        state.entry_exposure = defect_time
        state.defects_found = k + 1
        state.sojourn_clock = 0
        state.stage = DEV
        if stage == DEV:
            delta_downtime = 0.0
        else:
            delta_downtime = config.exposed_fractions[stage] * config.mttr
            state.downtime_acc += delta_downtime
        return StepOutcome(True, stage, delta_downtime, 1, False)

    state.exposure = end
    state.entry_exposure = anchor
    state.sojourn_clock = steps_here
    state.stage = stage
    if stage == ops and state.defects_found == len(times):
        state.delivered = True
        return StepOutcome(False, None, 0.0, 0, True)
    return StepOutcome(False, None, 0.0, 1, False)


def step(
    state: EnvState,
    action: int,
    config: RolloutConfig,
    timeline: DefectTimeline,
) -> tuple[EnvState, StepOutcome]:
    """Pure-function form of :func:`step_in_place`: returns a new state."""
    nxt = state.copy()
    outcome = step_in_place(nxt, action, config, timeline)
    return nxt, outcome


def scalarized_reward(outcome: StepOutcome, weights: Weights) -> float:
    """Negative weighted sum of the step's delivery and downtime increments."""
    return -(
        weights.w_delivery * weights.delivery_scale * outcome.delta_delivery
        + weights.w_downtime * weights.downtime_scale * outcome.delta_downtime
    )


@dataclass
class EpisodeOutcome:
    """Final (downtime, delivery time) of one episode plus its failure trace
    summary.  ``delivery_time`` counts the delivery-costing steps, i.e. the
    wall clock at the terminal entry into Ops."""

    downtime: float
    delivery_time: int
    failures_by_stage: dict[int, int]
    policy_label: str = ""

    def recompute_downtime(self, config: RolloutConfig) -> float:
        """Downtime implied by the failure counts alone (accounting check)."""
        fractions = config.exposed_fractions
        return config.mttr * math.fsum(
            fractions[s] * n for s, n in sorted(self.failures_by_stage.items()) if s != DEV
        )
