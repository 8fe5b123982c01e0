"""Experiment stages and their on-disk artifacts.

Stage outputs (all versioned with a ``format=phasefold.v1`` line or key):

    config.resolved   resolved configuration echo (INI)
    ensemble.npz      particle snapshots (binary, structure-of-arrays)
    particles_t*.csv  optional per-snapshot particle dumps
    ekf_series.csv    t, six coordinate-mean entries, 21 upper-triangle
                      covariance entries
    eom_series.csv    t, six mean-log coordinates, 21 upper-triangle
                      covariance entries
    metrics.csv       per-snapshot errors and log-likelihoods
    metrics.png/.svg  rendered comparison figures
    error.json        machine-readable failure record (on validity loss)

Running the stages one by one produces byte-identical artifacts to a single
``full`` run because ``full`` simply executes the same stage functions.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .ekf import EkfSeries, propagate_ekf
from .eom import EomSeries, propagate_eom
from .errors import PropagationValidityError
from .lie import exp_group
from .metrics import MetricSeries, evaluate_all, write_metrics_csv
from .sampler import Ensemble, simulate_ensemble, write_particles_csv

_FORMAT = "phasefold.v1"
_TRI = [(i, j) for i in range(6) for j in range(i, 6)]


def _series_header(mean_names: list[str]) -> str:
    cov_names = [f"cov_{i + 1}{j + 1}" for i, j in _TRI]
    return ",".join(["t"] + mean_names + cov_names)


def write_series_csv(path, times, means, covariances, mean_names) -> None:
    with open(path, "w") as fh:
        fh.write(f"format={_FORMAT}\n")
        fh.write(_series_header(mean_names) + "\n")
        for t, mean, cov in zip(times, means, covariances):
            row = [t, *mean, *(cov[i, j] for i, j in _TRI)]
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_series_csv(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing stage artifact: {path}")
    with open(path) as fh:
        header = fh.readline().strip()
        if header != f"format={_FORMAT}":
            raise ValueError(f"unrecognized format header in {path}: {header!r}")
        fh.readline()  # column names
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    data = np.asarray(rows)
    times = data[:, 0]
    means = data[:, 1:7]
    covs = np.zeros((len(rows), 6, 6))
    for col, (i, j) in enumerate(_TRI):
        covs[:, i, j] = data[:, 7 + col]
        covs[:, j, i] = data[:, 7 + col]
    return times, means, covs


def write_resolved_config(cfg: ExperimentConfig, out: Path) -> None:
    (out / "config.resolved").write_text(cfg.resolved_text())


def _ensure_out(cfg: ExperimentConfig, out) -> Path:
    out = Path(out if out is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved_config(cfg, out)
    return out


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def stage_simulate(cfg: ExperimentConfig, out=None, workers=None) -> Ensemble:
    out = _ensure_out(cfg, out)
    ensemble = simulate_ensemble(cfg.body(), cfg.trajectory_spec(), cfg.sim_config(), workers)
    payload = {
        "format": _FORMAT,
        "seed": cfg.seed,
        "dt": cfg.dt,
        "params_digest": cfg.digest(),
        "times": np.asarray(ensemble.times),
    }
    for i in range(len(ensemble.times)):
        payload[f"rot_{i}"] = ensemble.rotations[i]
        payload[f"mom_{i}"] = ensemble.momenta[i]
    np.savez(out / "ensemble.npz", **payload)
    if cfg.dump_particles:
        for t in ensemble.times:
            write_particles_csv(ensemble, t, out / f"particles_t{t:g}.csv", cfg.digest())
    return ensemble


def load_ensemble(out: Path) -> Ensemble:
    path = Path(out) / "ensemble.npz"
    if not path.exists():
        raise FileNotFoundError(f"missing stage artifact: {path}")
    with np.load(path, allow_pickle=False) as data:
        times = data["times"]
        rotations = [data[f"rot_{i}"] for i in range(len(times))]
        momenta = [data[f"mom_{i}"] for i in range(len(times))]
        return Ensemble(
            times=times,
            rotations=rotations,
            momenta=momenta,
            seed=int(data["seed"]),
            dt=float(data["dt"]),
        )


def _flush_error(out: Path, stage: str, err: PropagationValidityError) -> None:
    record = {
        "error": "propagation-validity-lost",
        "stage": stage,
        "time": err.time,
        "message": str(err),
    }
    (out / "error.json").write_text(json.dumps(record, indent=2) + "\n")


def stage_propagate_ekf(cfg: ExperimentConfig, out=None) -> EkfSeries:
    out = _ensure_out(cfg, out)
    series = propagate_ekf(cfg.body(), cfg.trajectory_spec(), None, cfg.dt, cfg.horizon)
    idx = [series.index_of(t) for t in cfg.snapshot_times()]
    write_series_csv(
        out / "ekf_series.csv",
        series.times[idx],
        series.means[idx],
        series.covariances[idx],
        [f"mean_{k + 1}" for k in range(6)],
    )
    return series


def stage_propagate_eom(cfg: ExperimentConfig, out=None) -> EomSeries:
    out = _ensure_out(cfg, out)
    try:
        series = propagate_eom(
            cfg.body(), cfg.trajectory_spec(), cfg.dt, cfg.horizon, cfg.sigma_eig_bound
        )
    except PropagationValidityError as err:
        if err.partial is not None and len(err.partial.times) > 0:
            partial: EomSeries = err.partial
            idx = [
                partial.index_of(t)
                for t in cfg.snapshot_times()
                if t <= partial.times[-1] + 1e-12
            ]
            write_series_csv(
                out / "eom_series.csv",
                partial.times[idx],
                partial.mean_logs()[idx],
                partial.covariances[idx],
                [f"mean_log_{k + 1}" for k in range(6)],
            )
        _flush_error(out, "propagate-eom", err)
        raise
    idx = [series.index_of(t) for t in cfg.snapshot_times()]
    write_series_csv(
        out / "eom_series.csv",
        series.times[idx],
        series.mean_logs()[idx],
        series.covariances[idx],
        [f"mean_log_{k + 1}" for k in range(6)],
    )
    return series


def load_ekf_series(out: Path) -> EkfSeries:
    times, means, covs = read_series_csv(Path(out) / "ekf_series.csv")
    return EkfSeries(times, means, covs)


def load_eom_series(out: Path) -> EomSeries:
    times, logs, covs = read_series_csv(Path(out) / "eom_series.csv")
    mu = exp_group(logs)
    return EomSeries(times, mu.rotation, mu.momentum, covs)


def stage_evaluate(cfg: ExperimentConfig, out=None) -> MetricSeries:
    out = _ensure_out(cfg, out)
    ensemble = load_ensemble(out)
    ekf_series = load_ekf_series(out)
    eom_series = load_eom_series(out)
    metrics = evaluate_all(ensemble, ekf_series, eom_series)
    write_metrics_csv(metrics, out / "metrics.csv")
    from .report import render_metrics

    render_metrics(metrics, out)
    return metrics


def stage_full(cfg: ExperimentConfig, out=None, workers=None) -> MetricSeries:
    out = _ensure_out(cfg, out)
    stage_simulate(cfg, out, workers)
    stage_propagate_ekf(cfg, out)
    stage_propagate_eom(cfg, out)
    return stage_evaluate(cfg, out)
