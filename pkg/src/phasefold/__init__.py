"""Uncertainty propagation for stochastically forced rigid bodies.

The toolkit propagates joint orientation/angular-momentum uncertainty on the
rotation/momentum phase group three ways: a Monte-Carlo particle sampler, a
coordinate-space extended Kalman filter baseline, and a second-order moment
expansion of the group-valued Fokker-Planck equation.  A CLI reproduces the
benchmark study end to end and reports delimited metrics plus rendered
figures.
"""

from .config import ExperimentConfig, load_config
from .dynamics import (
    BodyParams,
    TrajectorySpec,
    benchmark_body,
    benchmark_trajectory,
    integrate_deterministic,
)
from .ekf import EkfSeries, EkfState, propagate_ekf
from .eom import EomSeries, EomState, propagate_eom
from .estimator import SampleMoments, group_covariance, group_mean, product_mean, sample_moments
from .lie import PhaseElement, compose, exp_group, exp_so3, inverse, log_group, log_so3
from .metrics import MetricSeries, evaluate_all, frobenius_error, nll
from .sampler import Ensemble, SimConfig, simulate_ensemble

__all__ = [
    "BodyParams",
    "EkfSeries",
    "EkfState",
    "Ensemble",
    "EomSeries",
    "EomState",
    "ExperimentConfig",
    "MetricSeries",
    "PhaseElement",
    "SampleMoments",
    "SimConfig",
    "TrajectorySpec",
    "benchmark_body",
    "benchmark_trajectory",
    "compose",
    "evaluate_all",
    "exp_group",
    "exp_so3",
    "frobenius_error",
    "group_covariance",
    "group_mean",
    "integrate_deterministic",
    "inverse",
    "load_config",
    "log_group",
    "log_so3",
    "nll",
    "product_mean",
    "propagate_ekf",
    "propagate_eom",
    "sample_moments",
    "simulate_ensemble",
]

__version__ = "0.1.0"
