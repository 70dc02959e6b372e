"""FastAPI service exposing the simulator and experiment operations.

Endpoints are stateless compute: clients send the configuration and defect
times inline and receive result rows back.  The CLI is a thin client of this
surface and owns all file IO.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..experiment import (
    DataError,
    ExperimentConfig,
    compute_metrics,
    run_enumerate,
    run_single_ucb,
    run_sweep,
)
from ..pareto import OutcomePoint
from ..simulator import ACTION_NAMES, RolloutConfig, stage_name
from ..agents import Hyperparams
from ..timeline import (
    DefectTimeline,
    TimelineError,
    generate_nhpp_timeline,
    parse_failure_times,
)
from .models import (
    EnumerateRequest,
    EnumerateResponse,
    EpisodeRequest,
    EpisodeResponse,
    ExperimentModel,
    GenerateRequest,
    MetricsRequest,
    MetricsResponse,
    NaiveOutcomeModel,
    ParseRequest,
    PlotDataRequest,
    PlotDataResponse,
    PlotRowModel,
    PointModel,
    QTableRowModel,
    SweepOutcomeModel,
    SweepRequest,
    SweepResponse,
    TimelineResponse,
    TraceRowModel,
)


def _experiment_config(model: ExperimentModel) -> ExperimentConfig:
    try:
        return ExperimentConfig(
            rollout=RolloutConfig(
                n_dev=model.rollout.n_dev,
                stage_users=tuple(model.rollout.stage_users),
                n_ops=model.rollout.n_ops,
                mttr=model.rollout.mttr,
            ),
            hyper=Hyperparams(
                alpha=model.hyper.alpha, gamma=model.hyper.gamma, c=model.hyper.c
            ),
            weights_grid=tuple(model.weights_grid),
            naive_axes=model.axes_or_default(),
            seeds=tuple(model.seeds),
            bucket_boundaries=tuple(model.bucket_boundaries),
            workers=model.workers,
            delivery_scale=model.delivery_scale,
            downtime_scale=model.downtime_scale,
        )
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None


def _timeline(times: list[float]) -> DefectTimeline:
    try:
        return DefectTimeline(tuple(times))
    except TimelineError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None


def _points(models: list[PointModel]) -> list[OutcomePoint]:
    try:
        return [OutcomePoint(p.downtime, p.delivery_time, p.label) for p in models]
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from None


def create_app() -> FastAPI:
    app = FastAPI(
        title="rollout-lab",
        version=__version__,
        description="Staged-rollout policy simulation and evaluation service",
    )

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/timeline/parse", response_model=TimelineResponse)
    def timeline_parse(req: ParseRequest):
        try:
            tl = parse_failure_times(req.text)
        except TimelineError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return TimelineResponse(times=list(tl.times), count=tl.count)

    @app.post("/timeline/generate", response_model=TimelineResponse)
    def timeline_generate(req: GenerateRequest):
        try:
            tl = generate_nhpp_timeline(req.a, req.b, req.horizon, req.seed)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return TimelineResponse(times=list(tl.times), count=tl.count)

    @app.post("/enumerate", response_model=EnumerateResponse)
    def enumerate_policies(req: EnumerateRequest):
        config = _experiment_config(req.config)
        timeline = _timeline(req.times)
        results, front = run_enumerate(config, timeline)
        return EnumerateResponse(
            outcomes=[
                NaiveOutcomeModel(
                    policy=policy.label,
                    thresholds=list(policy.thresholds),
                    downtime=outcome.downtime,
                    delivery_time=outcome.delivery_time,
                )
                for policy, outcome in results
            ],
            front=[
                PointModel(downtime=p.downtime, delivery_time=p.delivery_time, label=p.label)
                for p in front
            ],
        )

    @app.post("/sweep-ucb", response_model=SweepResponse)
    def sweep_ucb(req: SweepRequest):
        config = _experiment_config(req.config)
        timeline = _timeline(req.times)
        runs, front = run_sweep(config, timeline)
        return SweepResponse(
            outcomes=[
                SweepOutcomeModel(
                    w0=r.w0,
                    seed=r.seed,
                    downtime=r.outcome.downtime,
                    delivery_time=r.outcome.delivery_time,
                )
                for r in runs
            ],
            front=[
                PointModel(downtime=p.downtime, delivery_time=p.delivery_time, label=p.label)
                for p in front
            ],
        )

    @app.post("/episode/ucb", response_model=EpisodeResponse)
    def episode_ucb(req: EpisodeRequest):
        config = _experiment_config(req.config)
        timeline = _timeline(req.times)
        if not 0.0 < req.w0 < 1.0:
            raise HTTPException(status_code=400, detail="w0 must lie in (0,1)")
        outcome, qtable, trace = run_single_ucb(config, timeline, req.w0, req.seed)
        m = config.rollout.num_stages
        return EpisodeResponse(
            downtime=outcome.downtime,
            delivery_time=outcome.delivery_time,
            failures_by_stage={
                stage_name(s, m): n for s, n in sorted(outcome.failures_by_stage.items())
            },
            trace=[
                TraceRowModel(
                    step=t.step,
                    stage=stage_name(t.stage, m),
                    action=ACTION_NAMES[t.action],
                    exposure=t.exposure,
                    defects_found=t.defects_found,
                    failure=t.failure,
                    delta_downtime=t.delta_downtime,
                    reward=t.reward,
                )
                for t in trace
            ],
            qtable=[
                QTableRowModel(
                    stage=stage_name(stage, m),
                    bucket=bucket,
                    action=ACTION_NAMES[action],
                    q=q,
                    visits=n,
                )
                for stage, bucket, action, q, n in qtable.rows()
            ],
        )

    @app.post("/metrics", response_model=MetricsResponse)
    def metrics(req: MetricsRequest):
        try:
            result = compute_metrics(
                _points(req.approach), _points(req.naive), req.include_dominated
            )
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return MetricsResponse(**result)

    @app.post("/plot-data", response_model=PlotDataResponse)
    def plot_data(req: PlotDataRequest):
        rows = [
            PlotRowModel(series=name, downtime=p.downtime, delivery_time=p.delivery_time)
            for name, points in req.series.items()
            for p in points
        ]
        return PlotDataResponse(rows=rows)

    return app


app = create_app()
