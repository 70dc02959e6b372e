"""Defect-discovery timelines: ingestion, validation, and synthesis.

A timeline is the ordered list of cumulative baseline-exposure times at which
unique defects are discovered.  Times are unitless "Dev-equivalent" exposure:
one unit equals one time step spent in the internal testing stage.  The
bundled SYS1 dataset uses seconds of testing time in that role.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "DefectTimeline",
    "TimelineError",
    "TimelineParseError",
    "TimelineValidationError",
    "EmptyTimelineError",
    "parse_failure_times",
    "format_failure_times",
    "load_timeline",
    "save_timeline",
    "builtin_dataset_path",
    "generate_nhpp_timeline",
]


class TimelineError(ValueError):
    """Base class for timeline ingestion errors."""


class TimelineParseError(TimelineError):
    """A data line could not be read as a number."""

    def __init__(self, line_no: int, content: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: not a number: {content!r}")


class TimelineValidationError(TimelineError):
    """The numeric sequence violates the timeline invariants."""

    def __init__(self, index: int, message: str):
        self.index = index
        super().__init__(f"index {index}: {message}")


class EmptyTimelineError(TimelineError):
    """Input contained no data lines at all (likely the wrong file)."""


@dataclass(frozen=True)
class DefectTimeline:
    """Strictly increasing, positive defect-discovery times.

    Immutable after construction; safe to share across concurrent runs.
    """

    times: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        prev = 0.0
        for i, t in enumerate(self.times):
            if not math.isfinite(t):
                raise TimelineValidationError(i, f"non-finite time {t!r}")
            if t <= 0:
                raise TimelineValidationError(i, f"time {t!r} is not positive")
            if t <= prev:
                raise TimelineValidationError(
                    i, f"time {t!r} does not increase past {prev!r}"
                )
            prev = t

    @property
    def count(self) -> int:
        return len(self.times)

    def __len__(self) -> int:
        return len(self.times)


def parse_failure_times(text: str) -> DefectTimeline:
    """Parse line-oriented failure-time text into a validated timeline.

    One decimal number per line; blank lines and ``#`` comment lines are
    ignored.  Raises :class:`TimelineParseError` (with the 1-based line
    number) on non-numeric data, :class:`TimelineValidationError` (with the
    0-based value index) on non-positive or non-increasing sequences, and
    :class:`EmptyTimelineError` when no data lines are present.
    """
    values: list[float] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise TimelineParseError(line_no, line) from None
    if not values:
        raise EmptyTimelineError("no failure times found in input")
    return DefectTimeline(tuple(values))


def format_failure_times(timeline: DefectTimeline) -> str:
    """Serialize a timeline to the one-number-per-line file format.

    ``parse_failure_times(format_failure_times(t)) == t`` exactly: floats are
    written with ``repr``, which round-trips.
    """
    return "".join(f"{t!r}\n" for t in timeline.times)


def load_timeline(path: str | Path) -> DefectTimeline:
    return parse_failure_times(Path(path).read_text(encoding="utf-8"))


def save_timeline(timeline: DefectTimeline, path: str | Path) -> None:
    Path(path).write_text(format_failure_times(timeline), encoding="utf-8")


def builtin_dataset_path(name: str = "sys1") -> Path:
    """Path of a dataset bundled with the package (currently only ``sys1``)."""
    candidate = resources.files("rollout_lab").joinpath(f"data/{name}.txt")
    with resources.as_file(candidate) as p:
        if not p.exists():
            raise FileNotFoundError(f"no builtin dataset named {name!r}")
        return Path(p)


def generate_nhpp_timeline(
    a: float, b: float, horizon: float, seed: int = 0
) -> DefectTimeline:
    """Synthesize a timeline from a decaying-rate nonhomogeneous Poisson process.

    The mean value function is ``a * (1 - exp(-b*t))``: ``a`` is the expected
    number of defects over an infinite horizon and ``b`` controls how fast the
    discovery rate decays.  The draw is a pure function of ``(a, b, horizon,
    seed)``; identical inputs replay identical timelines.
    """
    if a <= 0 or b <= 0 or horizon <= 0:
        raise ValueError(
            f"a, b, horizon must all be positive (got a={a}, b={b}, horizon={horizon})"
        )
    rng = np.random.default_rng(seed)
    expected = a * -math.expm1(-b * horizon)
    n = int(rng.poisson(expected))
    if n == 0:
        return DefectTimeline(())
    # Conditioned on the count, event times are iid with CDF F(t) proportional
    # to the mean value function truncated at the horizon.
    u = rng.random(n)
    scale = -math.expm1(-b * horizon)
    times = np.sort(-np.log1p(-u * scale) / b)
    # Ties or zeros have probability ~0 but float rounding can produce them;
    # nudge upward to keep the strict-increase invariant.
    out: list[float] = []
    prev = 0.0
    for t in times:
        t = float(t)
        while t <= prev:
            t = math.nextafter(t, math.inf)
        out.append(t)
        prev = t
    return DefectTimeline(tuple(out))
