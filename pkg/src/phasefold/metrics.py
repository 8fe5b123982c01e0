"""Comparison metrics: Frobenius mean errors and normalized log-likelihoods.

Each propagator is scored against the statistic it actually estimates: the
moment propagator against the group mean of the ensemble, the coordinate
filter against the rotation mean paired with the arithmetic momentum mean.
The per-sample normalized negative log-likelihood of a 6-dimensional
Gaussian is

    log((2 pi)^3 |det S|^(1/2)) + (1/2N) sum_i z_i^T S^-1 z_i,

with z taken in each method's own residual convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ekf import EkfSeries, ekf_nll_inputs
from .eom import EomSeries
from .errors import GridMismatchError, SingularCovarianceError
from .estimator import group_mean, log_residuals, product_mean
from .lie import exp_so3
from .sampler import Ensemble

_LOG_NORM = 3.0 * np.log(2.0 * np.pi)


def frobenius_error(q_sample, q_propagated) -> float:
    """Frobenius norm of the difference of two equally shaped statistics."""
    a = np.asarray(q_sample, dtype=float)
    b = np.asarray(q_propagated, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def nll(z: np.ndarray, sigma: np.ndarray) -> float:
    """Per-sample normalized negative log-likelihood of N(0, sigma)."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    sigma = np.asarray(sigma, dtype=float)
    eig = np.linalg.eigvalsh(0.5 * (sigma + sigma.T))
    if eig.min() <= 0.0 or eig.max() / eig.min() >= 1e12:
        raise SingularCovarianceError(
            f"covariance spectrum [{eig.min():.3e}, {eig.max():.3e}] is not invertible"
        )
    chol = np.linalg.cholesky(sigma)
    logdet = 2.0 * np.sum(np.log(np.diagonal(chol)))
    y = np.linalg.solve(chol, z.T)
    quad = float(np.sum(y * y))
    n = len(z)
    return float(_LOG_NORM + 0.5 * logdet + quad / (2.0 * n))


@dataclass(frozen=True)
class MetricSeries:
    """Per-snapshot mean errors and log-likelihoods for both propagators."""

    times: np.ndarray
    err_rot_ekf: np.ndarray
    err_rot_eom: np.ndarray
    err_mom_ekf: np.ndarray
    err_mom_eom: np.ndarray
    nll_ekf: np.ndarray
    nll_eom: np.ndarray
    nll_diff: np.ndarray

    COLUMNS = (
        "t",
        "err_rot_ekf",
        "err_rot_eom",
        "err_mom_ekf",
        "err_mom_eom",
        "nll_ekf",
        "nll_eom",
        "nll_diff",
    )

    def row(self, i: int) -> tuple[float, ...]:
        return (
            self.times[i],
            self.err_rot_ekf[i],
            self.err_rot_eom[i],
            self.err_mom_ekf[i],
            self.err_mom_eom[i],
            self.nll_ekf[i],
            self.nll_eom[i],
            self.nll_diff[i],
        )


def _nll_or_nan(z: np.ndarray, sigma: np.ndarray) -> float:
    # Degenerate propagated Gaussians (e.g. zero-noise runs) yield nan
    # likelihood columns instead of aborting the metric pass.
    try:
        return nll(z, sigma)
    except SingularCovarianceError:
        return float("nan")


def evaluate_all(
    ensemble: Ensemble, ekf_series: EkfSeries, eom_series: EomSeries
) -> MetricSeries:
    """Score both propagators against the ensemble on its snapshot grid."""
    k = len(ensemble.times)
    out = {name: np.empty(k) for name in MetricSeries.COLUMNS[1:]}

    for i, t in enumerate(ensemble.times):
        try:
            ekf_state = ekf_series.state_at(t)
            eom_state = eom_series.state_at(t)
        except ValueError as err:
            raise GridMismatchError(str(err)) from None

        rotations, momenta = ensemble.rotations[i], ensemble.momenta[i]
        mu_sample = group_mean(rotations, momenta)
        rot_sample, mom_sample = product_mean(rotations, momenta)

        out["err_rot_eom"][i] = frobenius_error(mu_sample.rotation, eom_state.mean.rotation)
        out["err_mom_eom"][i] = frobenius_error(mu_sample.momentum, eom_state.mean.momentum)
        out["err_rot_ekf"][i] = frobenius_error(rot_sample, exp_so3(ekf_state.coords))
        out["err_mom_ekf"][i] = frobenius_error(mom_sample, ekf_state.momentum)

        z_ekf = ekf_nll_inputs(rotations, momenta, ekf_state, wrap_degenerate=True)
        out["nll_ekf"][i] = _nll_or_nan(z_ekf, ekf_state.covariance)
        z_eom = log_residuals(rotations, momenta, eom_state.mean)
        out["nll_eom"][i] = _nll_or_nan(z_eom, eom_state.covariance)
        out["nll_diff"][i] = out["nll_eom"][i] - out["nll_ekf"][i]

    return MetricSeries(times=np.asarray(ensemble.times, dtype=float), **out)


def write_metrics_csv(series: MetricSeries, path) -> None:
    """Versioned delimited output with round-trip decimal formatting."""
    with open(path, "w") as fh:
        fh.write("format=phasefold.v1\n")
        fh.write(",".join(MetricSeries.COLUMNS) + "\n")
        for i in range(len(series.times)):
            fh.write(",".join(repr(float(v)) for v in series.row(i)) + "\n")


def read_metrics_csv(path) -> MetricSeries:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "format=phasefold.v1":
            raise ValueError(f"unrecognized format header in {path}: {header!r}")
        columns = fh.readline().strip().split(",")
        if tuple(columns) != MetricSeries.COLUMNS:
            raise ValueError(f"unexpected columns in {path}")
        data = np.array(
            [[float(v) for v in line.split(",")] for line in fh if line.strip()]
        )
    return MetricSeries(
        times=data[:, 0],
        err_rot_ekf=data[:, 1],
        err_rot_eom=data[:, 2],
        err_mom_ekf=data[:, 3],
        err_mom_eom=data[:, 4],
        nll_ekf=data[:, 5],
        nll_eom=data[:, 6],
        nll_diff=data[:, 7],
    )
