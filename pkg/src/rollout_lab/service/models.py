"""Request/response schemas for the experiment service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

from ..agents import DEFAULT_SOJOURN_BUCKETS
from ..experiment import (
    DEFAULT_SEEDS,
    DEFAULT_WEIGHTS_GRID,
    PAPER_HYPER,
    PAPER_ROLLOUT,
    PAPER_THRESHOLD_AXIS,
)


class RolloutModel(BaseModel):
    n_dev: int = PAPER_ROLLOUT.n_dev
    stage_users: list[int] = Field(default_factory=lambda: list(PAPER_ROLLOUT.stage_users))
    n_ops: int = PAPER_ROLLOUT.n_ops
    mttr: float = PAPER_ROLLOUT.mttr


class HyperModel(BaseModel):
    alpha: float = PAPER_HYPER.alpha
    gamma: float = PAPER_HYPER.gamma
    c: float = PAPER_HYPER.c


class ExperimentModel(BaseModel):
    """Wire form of an experiment configuration; defaults reproduce the
    reference SYS1 setup."""

    rollout: RolloutModel = Field(default_factory=RolloutModel)
    hyper: HyperModel = Field(default_factory=HyperModel)
    weights_grid: list[float] = Field(default_factory=lambda: list(DEFAULT_WEIGHTS_GRID))
    naive_axes: Optional[list[list[int]]] = None  # None -> paper axis per stage
    seeds: list[int] = Field(default_factory=lambda: list(DEFAULT_SEEDS))
    bucket_boundaries: list[int] = Field(
        default_factory=lambda: list(DEFAULT_SOJOURN_BUCKETS)
    )
    workers: int = 1
    delivery_scale: float = 1.0
    downtime_scale: float = 1.0

    def axes_or_default(self) -> tuple[tuple[int, ...], ...]:
        if self.naive_axes is not None:
            return tuple(tuple(axis) for axis in self.naive_axes)
        return tuple(PAPER_THRESHOLD_AXIS for _ in range(len(self.rollout.stage_users) + 1))


class PointModel(BaseModel):
    downtime: float
    delivery_time: float
    label: str = ""


class ParseRequest(BaseModel):
    text: str


class TimelineResponse(BaseModel):
    times: list[float]
    count: int


class GenerateRequest(BaseModel):
    a: float
    b: float
    horizon: float
    seed: int = 0


class EnumerateRequest(BaseModel):
    times: list[float]
    config: ExperimentModel = Field(default_factory=ExperimentModel)


class NaiveOutcomeModel(BaseModel):
    policy: str
    thresholds: list[int]
    downtime: float
    delivery_time: int


class EnumerateResponse(BaseModel):
    outcomes: list[NaiveOutcomeModel]
    front: list[PointModel]


class SweepRequest(BaseModel):
    times: list[float]
    config: ExperimentModel = Field(default_factory=ExperimentModel)


class SweepOutcomeModel(BaseModel):
    w0: float
    seed: int
    downtime: float
    delivery_time: int


class SweepResponse(BaseModel):
    outcomes: list[SweepOutcomeModel]
    front: list[PointModel]


class EpisodeRequest(BaseModel):
    times: list[float]
    config: ExperimentModel = Field(default_factory=ExperimentModel)
    w0: float = 0.5
    seed: int = 0


class TraceRowModel(BaseModel):
    step: int
    stage: str
    action: str
    exposure: float
    defects_found: int
    failure: bool
    delta_downtime: float
    reward: Optional[float]


class QTableRowModel(BaseModel):
    stage: str
    bucket: int
    action: str
    q: float
    visits: int


class EpisodeResponse(BaseModel):
    downtime: float
    delivery_time: int
    failures_by_stage: dict[str, int]
    trace: list[TraceRowModel]
    qtable: list[QTableRowModel]


class MetricsRequest(BaseModel):
    approach: list[PointModel]
    naive: list[PointModel]
    include_dominated: bool = False


class ObjectiveMetricsModel(BaseModel):
    range: float
    range_front: float
    avg_suboptimality: float
    n_points: int
    n_excluded: int


class MetricsResponse(BaseModel):
    downtime: ObjectiveMetricsModel
    delivery_time: ObjectiveMetricsModel
    meta: dict


class PlotDataRequest(BaseModel):
    series: dict[str, list[PointModel]]


class PlotRowModel(BaseModel):
    series: str
    downtime: float
    delivery_time: float


class PlotDataResponse(BaseModel):
    rows: list[PlotRowModel]
