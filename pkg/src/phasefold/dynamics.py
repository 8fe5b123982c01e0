"""Rigid-body model: drift field, prescribed momentum ramps, torque inversion.

The momentum obeys the forced Euler equation

    dl/dt + (I^-1 l) x l = -C I^-1 l + N(t) + noise,

and the orientation follows ``vee3(R^T dR/dt) = I^-1 l``.  On the phase group
the left-trivialized drift is simply ``(I^-1 l; -C I^-1 l + N(t))`` because
the transposed-rotation convention absorbs the gyroscopic cross term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import CoordinateEscapeError
from .lie import jac_right_inv_so3

TorqueLike = Union["TrajectorySpec", Callable[[float], np.ndarray], None]

# Exponential coordinates beyond this norm abort deterministic integration;
# the parameterization loses validity at the cut locus (norm pi).
_ESCAPE_MARGIN = 1e-2


@dataclass(frozen=True)
class BodyParams:
    """Inertia tensor, viscous coefficient matrix and noise scale matrix."""

    inertia: np.ndarray
    viscous: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        inertia = np.atleast_1d(np.asarray(self.inertia, dtype=float))
        if inertia.ndim == 1:
            inertia = np.diag(inertia)
        if inertia.shape != (3, 3):
            raise ValueError("inertia must be a 3x3 matrix or a diagonal 3-vector")
        if not np.allclose(inertia, inertia.T, atol=1e-12):
            raise ValueError("inertia must be symmetric")
        if np.any(np.linalg.eigvalsh(inertia) <= 0.0):
            raise ValueError("inertia must be positive definite")

        def _as_matrix(m, name):
            m = np.atleast_1d(np.asarray(m, dtype=float))
            if m.shape == (1,):
                m = m.item() * np.eye(3)
            elif m.shape == (3,):
                m = np.diag(m)
            if m.shape != (3, 3):
                raise ValueError(f"{name} must be scalar, 3-vector or 3x3 matrix")
            return m

        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "viscous", _as_matrix(self.viscous, "viscous"))
        object.__setattr__(self, "noise", _as_matrix(self.noise, "noise"))
        object.__setattr__(self, "_inertia_inv", np.linalg.inv(inertia))

    @property
    def inertia_inv(self) -> np.ndarray:
        return self._inertia_inv

    def diffusion_matrix(self) -> np.ndarray:
        """Full 6x6 noise matrix: zero rotational block over the momentum block."""
        b = np.zeros((6, 6))
        b[3:, 3:] = self.noise
        return b


def benchmark_body(c: float = 1.0, b: float = 1.0) -> BodyParams:
    """Benchmark body: principal inertia diag(2.070, 1.532, 1.236)."""
    return BodyParams(np.array([2.070, 1.532, 1.236]), c, b)


@dataclass(frozen=True)
class TrajectorySpec:
    """Per-component polynomial coefficients of a prescribed momentum path.

    ``coefficients[i, k]`` multiplies t**k in component i; degree <= 3.
    """

    coefficients: np.ndarray = field(default_factory=lambda: np.zeros((3, 1)))

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        if c.shape[0] != 3 or c.shape[1] > 4:
            raise ValueError("coefficients must be (3, <=4)")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coefficients", c)


def benchmark_trajectory(which: int) -> TrajectorySpec:
    """The two benchmark momentum ramps: (0, t, 2t) and (0, t+1, 2t+1)."""
    if which == 1:
        return TrajectorySpec(np.array([[0.0, 0.0], [0.0, 1.0], [0.0, 2.0]]))
    if which == 2:
        return TrajectorySpec(np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 2.0]]))
    raise ValueError(f"unknown benchmark trajectory {which!r}")


def momentum_star(spec: TrajectorySpec, t: float) -> np.ndarray:
    """Prescribed momentum l*(t) by exact polynomial evaluation."""
    powers = np.asarray(t, dtype=float) ** np.arange(spec.coefficients.shape[1])
    return spec.coefficients @ powers


def momentum_star_dot(spec: TrajectorySpec, t: float) -> np.ndarray:
    """Exact time derivative of the prescribed momentum."""
    c = spec.coefficients
    if c.shape[1] == 1:
        return np.zeros(3)
    dc = c[:, 1:] * np.arange(1, c.shape[1])
    powers = np.asarray(t, dtype=float) ** np.arange(dc.shape[1])
    return dc @ powers


def torque_star(spec: TrajectorySpec, params: BodyParams, t: float) -> np.ndarray:
    """Deterministic torque realizing l*(t) in the noise-free Euler equation."""
    l = momentum_star(spec, t)
    return (
        momentum_star_dot(spec, t)
        + np.cross(params.inertia_inv @ l, l)
        + params.viscous @ (params.inertia_inv @ l)
    )


def torque_function(params: BodyParams, torque: TorqueLike) -> Callable[[float], np.ndarray]:
    """Normalize a torque argument to a callable of time."""
    if torque is None:
        zero = np.zeros(3)
        return lambda t: zero
    if isinstance(torque, TrajectorySpec):
        return lambda t: torque_star(torque, params, t)
    return torque


def momentum_rate(params: BodyParams, l: np.ndarray, torque_t: np.ndarray) -> np.ndarray:
    """Right-hand side of the noise-free momentum equation."""
    il = l @ params.inertia_inv.T if l.ndim > 1 else params.inertia_inv @ l
    visc = l @ (params.viscous @ params.inertia_inv).T if l.ndim > 1 else params.viscous @ il
    return -np.cross(il, l) - visc + torque_t


def drift(params: BodyParams, l: np.ndarray, t: float, torque: TorqueLike = None) -> np.ndarray:
    """Left-trivialized deterministic velocity (I^-1 l; -C I^-1 l + N(t))."""
    il = params.inertia_inv @ l
    n = torque_function(params, torque)(t)
    return np.concatenate([il, -params.viscous @ il + n])


@dataclass(frozen=True)
class DeterministicPath:
    """Time series of exponential coordinates and momenta."""

    times: np.ndarray
    coords: np.ndarray
    momenta: np.ndarray

    def at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9:
            raise ValueError(f"time {t} not on the integration grid")
        return self.coords[i], self.momenta[i]


def _xl_rate(params, torque_fn, x, l, t):
    n = torque_fn(t)
    xdot = jac_right_inv_so3(x) @ (params.inertia_inv @ l)
    ldot = momentum_rate(params, l, n)
    return xdot, ldot


def heun_xl_step(params, torque_fn, x, l, t, dt):
    """One improved-Euler step of the coupled coordinate/momentum flow."""
    xd1, ld1 = _xl_rate(params, torque_fn, x, l, t)
    xd2, ld2 = _xl_rate(params, torque_fn, x + dt * xd1, l + dt * ld1, t + dt)
    return x + 0.5 * dt * (xd1 + xd2), l + 0.5 * dt * (ld1 + ld2)


def integrate_deterministic(
    params: BodyParams,
    torque: TorqueLike,
    x0: np.ndarray,
    l0: np.ndarray,
    dt: float,
    horizon: float,
) -> DeterministicPath:
    """Improved-Euler integration of the deterministic flow over [0, horizon]."""
    if dt <= 0.0 or horizon < dt:
        raise ValueError("need dt > 0 and horizon >= dt")
    torque_fn = torque_function(params, torque)
    steps = int(round(horizon / dt))
    x = np.array(x0, dtype=float)
    l = np.array(l0, dtype=float)
    coords = np.empty((steps + 1, 3))
    momenta = np.empty((steps + 1, 3))
    coords[0], momenta[0] = x, l
    for n in range(steps):
        t = n * dt
        x, l = heun_xl_step(params, torque_fn, x, l, t, dt)
        if np.linalg.norm(x) >= np.pi - _ESCAPE_MARGIN:
            raise CoordinateEscapeError(
                f"exponential coordinate reached norm {np.linalg.norm(x):.4f} at t={t + dt:.4f}",
                time=t + dt,
            )
        coords[n + 1], momenta[n + 1] = x, l
    times = np.arange(steps + 1) * dt
    return DeterministicPath(times, coords, momenta)
