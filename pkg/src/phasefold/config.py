"""Experiment configuration: plain-text key=value sections with overrides.

A configuration fully determines one benchmark run (body, trajectory,
sampling, output locations).  Every stage echoes the resolved configuration
to ``config.resolved`` so artifacts are reproducible from their directory
alone.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import BodyParams, TrajectorySpec, benchmark_trajectory
from .errors import ConfigError
from .sampler import SimConfig

PAPER_SCALE_PARTICLES = 5_000_000

_DEFAULTS = {
    "inertia": (2.070, 1.532, 1.236),
    "viscous": 1.0,
    "noise": 1.0,
    "trajectory": 1,
    "coefficients": None,
    "particles": 100_000,
    "dt": 1e-3,
    "horizon": 1.0,
    "seed": 12345,
    "snapshot_stride": 0.05,
    "out_dir": "phasefold-run",
    "dump_particles": False,
    "sigma_eig_bound": 1.0,
}


@dataclass(frozen=True)
class ExperimentConfig:
    inertia: tuple[float, float, float] = _DEFAULTS["inertia"]
    viscous: float = _DEFAULTS["viscous"]
    noise: float = _DEFAULTS["noise"]
    trajectory: int | None = _DEFAULTS["trajectory"]
    coefficients: tuple | None = _DEFAULTS["coefficients"]
    particles: int = _DEFAULTS["particles"]
    dt: float = _DEFAULTS["dt"]
    horizon: float = _DEFAULTS["horizon"]
    seed: int = _DEFAULTS["seed"]
    snapshot_stride: float = _DEFAULTS["snapshot_stride"]
    out_dir: str = _DEFAULTS["out_dir"]
    dump_particles: bool = _DEFAULTS["dump_particles"]
    sigma_eig_bound: float = _DEFAULTS["sigma_eig_bound"]

    def __post_init__(self):
        if len(self.inertia) != 3 or any(v <= 0.0 for v in self.inertia):
            raise ConfigError("body.inertia needs three positive entries")
        if self.viscous < 0.0:
            raise ConfigError("body.viscous must be non-negative")
        if self.noise < 0.0:
            raise ConfigError("body.noise must be non-negative")
        if self.coefficients is None and self.trajectory not in (1, 2):
            raise ConfigError("trajectory.id must be 1 or 2 (or give coefficients)")
        if self.particles < 1:
            raise ConfigError("simulation.particles must be positive")
        if self.dt <= 0.0:
            raise ConfigError("simulation.dt must be positive")
        if self.horizon < self.dt:
            raise ConfigError("simulation.horizon must cover at least one step")
        stride_steps = self.snapshot_stride / self.dt
        if abs(stride_steps - round(stride_steps)) > 1e-9 or self.snapshot_stride <= 0:
            raise ConfigError("simulation.snapshot_stride must be a positive multiple of dt")

    # -- derived objects ---------------------------------------------------

    def body(self) -> BodyParams:
        return BodyParams(np.asarray(self.inertia), self.viscous, self.noise)

    def trajectory_spec(self) -> TrajectorySpec:
        if self.coefficients is not None:
            return TrajectorySpec(np.asarray(self.coefficients, dtype=float))
        return benchmark_trajectory(self.trajectory)

    def snapshot_times(self) -> tuple[float, ...]:
        n = int(round(self.horizon / self.snapshot_stride))
        steps_per = int(round(self.snapshot_stride / self.dt))
        return tuple((k * steps_per) * self.dt for k in range(1, n + 1))

    def sim_config(self) -> SimConfig:
        return SimConfig(
            particles=self.particles,
            dt=self.dt,
            horizon=self.horizon,
            seed=self.seed,
            snapshot_times=self.snapshot_times(),
        )

    # -- serialization -----------------------------------------------------

    def resolved_text(self) -> str:
        cp = configparser.ConfigParser()
        cp["meta"] = {"format": "phasefold.v1"}
        cp["body"] = {
            "inertia": " ".join(repr(v) for v in self.inertia),
            "viscous": repr(self.viscous),
            "noise": repr(self.noise),
        }
        traj = {}
        if self.coefficients is not None:
            traj["coefficients"] = "; ".join(
                " ".join(repr(float(c)) for c in row) for row in self.coefficients
            )
        else:
            traj["id"] = str(self.trajectory)
        cp["trajectory"] = traj
        cp["simulation"] = {
            "particles": str(self.particles),
            "dt": repr(self.dt),
            "horizon": repr(self.horizon),
            "seed": str(self.seed),
            "snapshot_stride": repr(self.snapshot_stride),
        }
        cp["limits"] = {"sigma_eig_bound": repr(self.sigma_eig_bound)}
        cp["output"] = {
            "directory": self.out_dir,
            "dump_particles": str(self.dump_particles).lower(),
        }
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def digest(self) -> str:
        """Short hash of the physics/sampling parameters."""
        payload = self.resolved_text().split("[output]")[0]
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _parse_coefficients(text: str):
    rows = [row.strip() for row in text.split(";") if row.strip()]
    if len(rows) != 3:
        raise ConfigError("trajectory.coefficients needs three ';'-separated rows")
    parsed = []
    for row in rows:
        values = [float(v) for v in row.split()]
        if not 1 <= len(values) <= 4:
            raise ConfigError("trajectory.coefficients rows take 1..4 entries")
        values += [0.0] * (4 - len(values))
        parsed.append(tuple(values))
    return tuple(parsed)


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Read an INI file (optional) and apply command-line overrides."""
    values = dict(_DEFAULTS)
    if path is not None:
        cp = configparser.ConfigParser()
        try:
            with open(path) as fh:
                cp.read_file(fh, source=str(path))
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from None
        except configparser.Error as err:
            raise ConfigError(f"config parse error: {err}") from None
        try:
            _apply_file(values, cp)
        except ValueError as err:
            raise ConfigError(f"config value error in {path}: {err}") from None
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    if overrides and overrides.get("paper_scale"):
        values["particles"] = PAPER_SCALE_PARTICLES
    values.pop("paper_scale", None)
    return ExperimentConfig(**values)


def _apply_file(values: dict, cp: configparser.ConfigParser) -> None:
    def grab(section, key, cast):
        if cp.has_option(section, key):
            raw = cp.get(section, key)
            try:
                return cast(raw)
            except ValueError:
                raise ValueError(f"[{section}] {key} = {raw!r}") from None
        return None

    inertia = grab("body", "inertia", lambda s: tuple(float(v) for v in s.split()))
    if inertia is not None:
        values["inertia"] = inertia
    for key, cast in (("viscous", float), ("noise", float)):
        v = grab("body", key, cast)
        if v is not None:
            values[key] = v
    tid = grab("trajectory", "id", int)
    if tid is not None:
        values["trajectory"] = tid
    coeffs = grab("trajectory", "coefficients", _parse_coefficients)
    if coeffs is not None:
        values["coefficients"] = coeffs
        values["trajectory"] = None
    for key, cast in (
        ("particles", int),
        ("dt", float),
        ("horizon", float),
        ("seed", int),
        ("snapshot_stride", float),
    ):
        v = grab("simulation", key, cast)
        if v is not None:
            values[key] = v
    bound = grab("limits", "sigma_eig_bound", float)
    if bound is not None:
        values["sigma_eig_bound"] = bound
    directory = grab("output", "directory", str)
    if directory is not None:
        values["out_dir"] = directory
    dump = grab("output", "dump_particles", lambda s: s.strip().lower() in ("1", "true", "yes"))
    if dump is not None:
        values["dump_particles"] = dump


def with_overrides(cfg: ExperimentConfig, **kwargs) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kwargs.items() if v is not None})
