import numpy as np
import pytest

from rollout_lab.simulator import RolloutConfig
from rollout_lab.timeline import DefectTimeline, builtin_dataset_path, load_timeline


@pytest.fixture(scope="session")
def sys1() -> DefectTimeline:
    return load_timeline(builtin_dataset_path("sys1"))


@pytest.fixture(scope="session")
def paper_config() -> RolloutConfig:
    return RolloutConfig(n_dev=50, stage_users=(1000,), n_ops=10000, mttr=10.0)


@pytest.fixture
def small_config() -> RolloutConfig:
    return RolloutConfig(n_dev=2, stage_users=(10,), n_ops=100, mttr=5.0)


def random_timeline(rng: np.random.Generator, horizon: float = 500.0) -> DefectTimeline:
    """Random strictly-increasing positive times for equivalence tests."""
    n = int(rng.integers(0, 60))
    if n == 0:
        return DefectTimeline(())
    if rng.random() < 0.5:
        # integer-valued times, like the bundled dataset
        gaps = rng.integers(1, int(horizon) // max(n, 1) + 2, size=n)
        times = np.cumsum(gaps).astype(float)
    else:
        times = np.sort(rng.uniform(0.5, horizon, size=n))
        times = np.maximum.accumulate(times + np.arange(n) * 1e-9)
    return DefectTimeline(tuple(float(t) for t in times))


def random_rollout_config(rng: np.random.Generator) -> RolloutConfig:
    n_dev = int(rng.integers(1, 20))
    m = int(rng.integers(1, 4))
    users = []
    prev = n_dev
    for _ in range(m):
        prev = prev + int(rng.integers(1, 200))
        users.append(prev)
    n_ops = prev + int(rng.integers(1, 2000))
    mttr = float(rng.uniform(0.0, 50.0))
    return RolloutConfig(n_dev=n_dev, stage_users=tuple(users), n_ops=n_ops, mttr=mttr)
