import numpy as np
import pytest

from phasefold.dynamics import BodyParams, TrajectorySpec, benchmark_body, benchmark_trajectory


@pytest.fixture
def rng():
    return np.random.default_rng(20260811)


@pytest.fixture
def body() -> BodyParams:
    """Benchmark body: anisotropic inertia, unit viscous and noise scales."""
    return benchmark_body()


@pytest.fixture
def trajectory_one() -> TrajectorySpec:
    return benchmark_trajectory(1)


@pytest.fixture
def trajectory_two() -> TrajectorySpec:
    return benchmark_trajectory(2)
