import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rollout_lab.pareto import (
    InterpolationRangeError,
    OutcomePoint,
    ParetoFront,
    average_suboptimality,
    dominates,
    interpolate_naive,
    pareto_front,
    range_metric,
    suboptimality,
)


def pts(*pairs):
    return [OutcomePoint(d, t, label=f"p{i}") for i, (d, t) in enumerate(pairs)]


def brute_force_front(points):
    """O(n^2) pairwise-domination oracle."""
    kept = []
    for p in points:
        if not any(dominates(q, p) for q in points if q != p):
            kept.append((p.downtime, p.delivery_time))
    return set(kept)


class TestOutcomePoint:
    def test_rejects_negative_or_non_finite(self):
        with pytest.raises(ValueError):
            OutcomePoint(-1.0, 2.0)
        with pytest.raises(ValueError):
            OutcomePoint(1.0, float("inf"))

    def test_objective_accessor(self):
        p = OutcomePoint(1.0, 2.0)
        assert p.objective("downtime") == 1.0
        assert p.objective("delivery_time") == 2.0
        with pytest.raises(ValueError):
            p.objective("speed")


class TestParetoFront:
    def test_spec_example(self):
        front = pareto_front(pts((1, 5), (2, 3), (3, 4)))
        assert [(p.downtime, p.delivery_time) for p in front] == [(1, 5), (2, 3)]

    def test_single_point(self):
        front = pareto_front(pts((4, 4)))
        assert len(front) == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            pareto_front([])

    def test_duplicates_collapse_keeping_first(self):
        a = OutcomePoint(1.0, 5.0, label="first")
        b = OutcomePoint(1.0, 5.0, label="second")
        front = pareto_front([a, b])
        assert len(front) == 1
        assert front.points[0].label == "first"

    def test_equal_downtime_keeps_min_delivery(self):
        front = pareto_front(pts((1, 9), (1, 4), (2, 1)))
        assert [(p.downtime, p.delivery_time) for p in front] == [(1, 4), (2, 1)]

    def test_front_is_sorted_and_strictly_monotone(self):
        rng = np.random.default_rng(3)
        points = pts(*zip(rng.integers(0, 50, 200), rng.integers(0, 50, 200)))
        front = pareto_front(points)
        downs = [p.downtime for p in front]
        dels = [p.delivery_time for p in front]
        assert downs == sorted(downs)
        assert all(b < a for a, b in zip(dels, dels[1:]))

    def test_idempotent(self):
        rng = np.random.default_rng(5)
        points = pts(*zip(rng.random(300), rng.random(300)))
        once = pareto_front(points)
        twice = pareto_front(list(once.points))
        assert once == twice

    def test_no_input_point_dominates_a_front_point(self):
        rng = np.random.default_rng(8)
        points = pts(*zip(rng.random(200), rng.random(200)))
        front = pareto_front(points)
        for fp in front:
            assert not any(dominates(q, fp) for q in points)

    @settings(max_examples=80, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_matches_brute_force_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 120))
        coords = rng.integers(0, 20, size=(n, 2)).astype(float)  # many ties
        points = [OutcomePoint(d, t) for d, t in coords]
        front = pareto_front(points)
        assert {(p.downtime, p.delivery_time) for p in front} == brute_force_front(points)

    def test_invalid_front_construction_rejected(self):
        with pytest.raises(ValueError):
            ParetoFront((OutcomePoint(1, 5), OutcomePoint(2, 6)))


class TestRangeMetric:
    def test_identity(self):
        points = pts((0, 10), (5, 4), (9, 1))
        assert range_metric(points, points, "downtime") == 1.0
        assert range_metric(points, points, "delivery_time") == 1.0

    def test_direct_substitution(self):
        approach = pts((10, 1), (20, 0))
        naive = pts((0, 1), (40, 0))
        assert range_metric(approach, naive, "downtime") == 0.25

    def test_degenerate_naive_rejected(self):
        with pytest.raises(ValueError):
            range_metric(pts((1, 2), (3, 4)), pts((5, 1), (5, 2)), "downtime")

    @given(
        values=st.lists(
            st.floats(min_value=0, max_value=1e6), min_size=2, max_size=20, unique=True
        )
    )
    def test_self_range_is_one(self, values):
        points = [OutcomePoint(v, 1.0) for v in values]
        assert range_metric(points, points, "downtime") == 1.0


FRONT = ParetoFront((OutcomePoint(100.0, 10.0), OutcomePoint(200.0, 5.0)))


class TestInterpolation:
    def test_midpoint(self):
        assert interpolate_naive(FRONT, "downtime", 150.0) == 7.5

    def test_exact_front_point(self):
        assert interpolate_naive(FRONT, "downtime", 100.0) == 10.0
        assert interpolate_naive(FRONT, "downtime", 200.0) == 5.0

    def test_out_of_range(self):
        with pytest.raises(InterpolationRangeError):
            interpolate_naive(FRONT, "downtime", 250.0)
        with pytest.raises(InterpolationRangeError):
            interpolate_naive(FRONT, "downtime", 99.0)

    def test_fixed_delivery_side(self):
        assert interpolate_naive(FRONT, "delivery_time", 7.5) == 150.0
        assert interpolate_naive(FRONT, "delivery_time", 10.0) == 100.0

    def test_single_point_front(self):
        front = ParetoFront((OutcomePoint(3.0, 4.0),))
        assert interpolate_naive(front, "downtime", 3.0) == 4.0
        with pytest.raises(InterpolationRangeError):
            interpolate_naive(front, "downtime", 3.5)

    def test_monotone_in_fixed_downtime(self):
        rng = np.random.default_rng(12)
        points = pts(*zip(rng.random(100) * 100, rng.random(100) * 100))
        front = pareto_front(points)
        lo, hi = front.span("downtime")
        values = np.linspace(lo, hi, 40)
        interp = [interpolate_naive(front, "downtime", float(v)) for v in values]
        assert all(b <= a for a, b in zip(interp, interp[1:]))


class TestSuboptimality:
    def test_point_on_front_is_one(self):
        assert suboptimality(OutcomePoint(100.0, 10.0), FRONT, "downtime") == 1.0
        assert suboptimality(OutcomePoint(200.0, 5.0), FRONT, "delivery_time") == 1.0

    def test_midpoint_example(self):
        point = OutcomePoint(150.0, 15.0)
        assert suboptimality(point, FRONT, "delivery_time") == 15.0 / 7.5

    def test_out_of_span_propagates(self):
        with pytest.raises(InterpolationRangeError):
            suboptimality(OutcomePoint(250.0, 1.0), FRONT, "delivery_time")

    def test_zero_baseline_not_comparable(self):
        front = ParetoFront((OutcomePoint(0.0, 10.0), OutcomePoint(5.0, 2.0)))
        with pytest.raises(InterpolationRangeError):
            suboptimality(OutcomePoint(4.0, 10.0), front, "downtime")


class TestAverageSuboptimality:
    def test_front_against_itself_is_exactly_one(self):
        summary = average_suboptimality(list(FRONT.points), FRONT, "downtime")
        assert summary.mean == 1.0
        assert summary.n_points == 2
        assert summary.n_excluded == 0

    def test_arithmetic_mean(self):
        points = [OutcomePoint(150.0, 15.0), OutcomePoint(150.0, 30.0)]
        summary = average_suboptimality(points, FRONT, "delivery_time")
        assert summary.mean == (2.0 + 4.0) / 2

    def test_excluded_points_counted(self):
        points = [OutcomePoint(150.0, 15.0), OutcomePoint(999.0, 1.0)]
        summary = average_suboptimality(points, FRONT, "delivery_time")
        assert summary.n_points == 1
        assert summary.n_excluded == 1

    def test_no_comparable_points_rejected(self):
        with pytest.raises(ValueError):
            average_suboptimality([OutcomePoint(999.0, 1.0)], FRONT, "delivery_time")
