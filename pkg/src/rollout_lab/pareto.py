"""Non-dominated fronts and baseline-relative evaluation metrics.

Both objectives (downtime, delivery time) are minimized.  The metrics
normalize an approach against the naive-enumeration baseline: ``range``
compares objective spans, ``suboptimality`` compares a point against the
naive front holding the other objective fixed (linear interpolation between
bracketing front points).
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Sequence

__all__ = [
    "OBJECTIVES",
    "OutcomePoint",
    "ParetoFront",
    "InterpolationRangeError",
    "dominates",
    "pareto_front",
    "range_metric",
    "interpolate_naive",
    "suboptimality",
    "SuboptimalitySummary",
    "average_suboptimality",
]

OBJECTIVES = ("downtime", "delivery_time")


class InterpolationRangeError(ValueError):
    """The queried coordinate falls outside the naive front's span (no
    extrapolation), or the front gives no usable baseline value there."""


@dataclass(frozen=True)
class OutcomePoint:
    downtime: float
    delivery_time: float
    label: str = ""

    def __post_init__(self):
        for name in OBJECTIVES:
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0 (got {v})")

    def objective(self, name: str) -> float:
        if name not in OBJECTIVES:
            raise ValueError(f"unknown objective {name!r}")
        return getattr(self, name)


def _other(objective: str) -> str:
    if objective == "downtime":
        return "delivery_time"
    if objective == "delivery_time":
        return "downtime"
    raise ValueError(f"unknown objective {objective!r}")


def dominates(p: OutcomePoint, q: OutcomePoint) -> bool:
    """Weak dominance for minimization: p no worse in both, better in one."""
    return (
        p.downtime <= q.downtime
        and p.delivery_time <= q.delivery_time
        and (p.downtime < q.downtime or p.delivery_time < q.delivery_time)
    )


@dataclass(frozen=True)
class ParetoFront:
    """Non-dominated points sorted by ascending downtime.

    On a valid front delivery time is then strictly decreasing.
    """

    points: tuple[OutcomePoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not self.points:
            raise ValueError("a Pareto front cannot be empty")
        for a, b in zip(self.points, self.points[1:]):
            if not (b.downtime > a.downtime and b.delivery_time < a.delivery_time):
                raise ValueError(
                    "front must be strictly increasing in downtime and strictly "
                    f"decreasing in delivery time (got {a} then {b})"
                )

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def span(self, objective: str) -> tuple[float, float]:
        values = [p.objective(objective) for p in self.points]
        return min(values), max(values)


def pareto_front(points: Iterable[OutcomePoint]) -> ParetoFront:
    """Extract the non-dominated subset (duplicate coordinates collapse to the
    first occurrence)."""
    pts = list(points)
    if not pts:
        raise ValueError("cannot build a Pareto front from no points")
    order = sorted(range(len(pts)), key=lambda i: (pts[i].downtime, pts[i].delivery_time))
    kept: list[OutcomePoint] = []
    best_delivery = math.inf
    for i in order:
        p = pts[i]
        if p.delivery_time < best_delivery:
            kept.append(p)
            best_delivery = p.delivery_time
    return ParetoFront(tuple(kept))


def range_metric(
    approach_points: Sequence[OutcomePoint],
    naive_points: Sequence[OutcomePoint],
    objective: str,
) -> float:
    """Objective span of the approach divided by the naive baseline's span."""
    if not approach_points or not naive_points:
        raise ValueError("point lists must be non-empty")
    a = [p.objective(objective) for p in approach_points]
    n = [p.objective(objective) for p in naive_points]
    naive_span = max(n) - min(n)
    if naive_span == 0:
        raise ValueError(f"naive baseline has zero span on {objective!r}")
    return (max(a) - min(a)) / naive_span


def interpolate_naive(front: ParetoFront, fixed_objective: str, value: float) -> float:
    """Value of the *other* objective on the front at the given coordinate.

    Exact front coordinates return the stored value; anything between two
    front points is linearly interpolated; anything outside the span raises
    :class:`InterpolationRangeError`.
    """
    _other(fixed_objective)  # validates the objective name
    pts = front.points
    if fixed_objective == "downtime":
        xs = [p.downtime for p in pts]
        ys = [p.delivery_time for p in pts]
    else:
        # delivery time decreases along the front; search it reversed
        xs = [p.delivery_time for p in reversed(pts)]
        ys = [p.downtime for p in reversed(pts)]
    if value < xs[0] or value > xs[-1]:
        raise InterpolationRangeError(
            f"{fixed_objective}={value!r} outside naive front span "
            f"[{xs[0]!r}, {xs[-1]!r}]"
        )
    i = bisect_left(xs, value)
    if i < len(xs) and xs[i] == value:
        return ys[i]
    x0, x1 = xs[i - 1], xs[i]
    y0, y1 = ys[i - 1], ys[i]
    return y0 + (y1 - y0) * (value - x0) / (x1 - x0)


def suboptimality(point: OutcomePoint, naive_front: ParetoFront, objective: str) -> float:
    """Ratio of the point's objective to the naive front's value at the same
    coordinate of the other objective (1.0 means on par with the baseline)."""
    other = _other(objective)
    baseline = interpolate_naive(naive_front, other, point.objective(other))
    if baseline == 0:
        raise InterpolationRangeError(
            f"naive front reaches {objective}=0 at {other}={point.objective(other)!r}; "
            "the ratio is undefined there"
        )
    return point.objective(objective) / baseline


@dataclass(frozen=True)
class SuboptimalitySummary:
    mean: float
    n_points: int
    n_excluded: int


def average_suboptimality(
    points: Sequence[OutcomePoint], naive_front: ParetoFront, objective: str
) -> SuboptimalitySummary:
    """Mean suboptimality over the comparable points.

    Points whose other-objective coordinate falls outside the naive front's
    span have no comparable baseline policy; they are excluded and counted.
    Raises ``ValueError`` when nothing is comparable.
    """
    ratios: list[float] = []
    excluded = 0
    for p in points:
        try:
            ratios.append(suboptimality(p, naive_front, objective))
        except InterpolationRangeError:
            excluded += 1
    if not ratios:
        raise ValueError(
            f"no comparable points for {objective!r} ({excluded} outside the naive span)"
        )
    return SuboptimalitySummary(math.fsum(ratios) / len(ratios), len(ratios), excluded)
