"""Monte-Carlo simulation of the stochastically forced rigid body.

Momentum updates use the improved-Euler scheme for stochastic equations
(the same Wiener increment enters both stages); the orientation is advanced
by the midpoint exponential update

    R(t+dt) = R(t) @ exp_so3( dt/2 * (I^-1 l(t) + I^-1 l(t+dt)) ),

which keeps every particle exactly on the rotation manifold.

Noise streams are counter-based: particles are split into fixed-size chunks
and chunk ``c`` draws from ``Philox(SeedSequence(seed, spawn_key=(c,)))`` in
step order.  The chunk size is a constant of the algorithm, so the ensemble
is a pure function of (params, trajectory, config) regardless of how many
workers execute the chunks.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import BodyParams, TorqueLike, momentum_rate, momentum_star, torque_function
from .lie import exp_so3

_CHUNK = 32768


def default_workers() -> int:
    return max(1, int(os.environ.get("PHASEFOLD_WORKERS", "1")))


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    out[:, 0] = a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1]
    out[:, 1] = a[:, 2] * b[:, 0] - a[:, 0] * b[:, 2]
    out[:, 2] = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    return out


def _rodrigues(w: np.ndarray) -> np.ndarray:
    """Batched rotation matrices for (n,3) axis-angle vectors.

    Component-wise assembly of I + s*hat(w) + c*(w w^T - |w|^2 I); same
    closed form as `lie.exp_so3` without intermediate matrix products.
    """
    w0, w1, w2 = w[:, 0], w[:, 1], w[:, 2]
    theta2 = w0 * w0 + w1 * w1 + w2 * w2
    theta = np.sqrt(theta2)
    small = theta < 1e-6
    safe = np.where(small, 1.0, theta)
    s = np.where(small, 1.0 - theta2 / 6.0, np.sin(safe) / safe)
    c = np.where(
        small, 0.5 - theta2 / 24.0, 2.0 * np.sin(safe / 2.0) ** 2 / theta2.clip(min=1e-300)
    )
    out = np.empty((len(w), 3, 3))
    out[:, 0, 0] = 1.0 + c * (w0 * w0 - theta2)
    out[:, 1, 1] = 1.0 + c * (w1 * w1 - theta2)
    out[:, 2, 2] = 1.0 + c * (w2 * w2 - theta2)
    cw01 = c * w0 * w1
    cw02 = c * w0 * w2
    cw12 = c * w1 * w2
    sw0, sw1, sw2 = s * w0, s * w1, s * w2
    out[:, 0, 1] = cw01 - sw2
    out[:, 1, 0] = cw01 + sw2
    out[:, 0, 2] = cw02 + sw1
    out[:, 2, 0] = cw02 - sw1
    out[:, 1, 2] = cw12 - sw0
    out[:, 2, 1] = cw12 + sw0
    return out


@dataclass(frozen=True)
class SimConfig:
    """Particle count, step size, horizon, seed and snapshot grid."""

    particles: int
    dt: float
    horizon: float
    seed: int
    snapshot_times: tuple[float, ...]

    def __post_init__(self):
        if self.particles < 1:
            raise ValueError("particle count must be positive")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.horizon < self.dt:
            raise ValueError("horizon must cover at least one step")
        times = tuple(float(t) for t in self.snapshot_times)
        if sorted(times) != list(times):
            raise ValueError("snapshot times must be sorted")
        for t in times:
            if t < 0.0 or t > self.horizon + 1e-12:
                raise ValueError(f"snapshot time {t} outside [0, horizon]")
            if abs(t - round(t / self.dt) * self.dt) > 1e-12:
                raise ValueError(f"snapshot time {t} is not a multiple of dt")
        object.__setattr__(self, "snapshot_times", times)

    def snapshot_steps(self) -> list[int]:
        return [int(round(t / self.dt)) for t in self.snapshot_times]

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass(frozen=True)
class Ensemble:
    """Particle snapshots in structure-of-arrays layout, one slot per time."""

    times: np.ndarray
    rotations: list[np.ndarray] = field(repr=False)
    momenta: list[np.ndarray] = field(repr=False)
    seed: int = 0
    dt: float = 0.0

    @property
    def particles(self) -> int:
        return self.momenta[0].shape[0]

    def index_of(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9:
            raise ValueError(f"no snapshot at t={t}")
        return i

    def at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        i = self.index_of(t)
        return self.rotations[i], self.momenta[i]


def step_momentum(
    params: BodyParams,
    torque: TorqueLike,
    l: np.ndarray,
    t: float,
    dt: float,
    dw: np.ndarray,
) -> np.ndarray:
    """One improved-Euler momentum step; ``dw`` has variance dt per axis."""
    torque_fn = torque_function(params, torque)
    noise = dw @ params.noise.T
    k1 = momentum_rate(params, l, torque_fn(t)) * dt + noise
    k2 = momentum_rate(params, l + k1, torque_fn(t + dt)) * dt + noise
    return l + 0.5 * (k1 + k2)


def step_rotation(
    r: np.ndarray, params: BodyParams, l_t: np.ndarray, l_next: np.ndarray, dt: float
) -> np.ndarray:
    """Midpoint exponential rotation update."""
    w = 0.5 * dt * (l_t + l_next) @ params.inertia_inv.T
    return r @ exp_so3(w)


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(chunk_index,))
    return np.random.Generator(np.random.Philox(ss))


def _simulate_chunk(params, torque_fn, l0, cfg, chunk_index, start, stop, out_r, out_l):
    n = stop - start
    rng = _chunk_rng(cfg.seed, chunk_index)
    dt = cfg.dt
    sqrt_dt = np.sqrt(dt)
    draw_noise = np.any(params.noise != 0.0)
    noise_t = params.noise.T
    i_inv_t = params.inertia_inv.T
    visc_t = (params.viscous @ params.inertia_inv).T

    r = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
    l = np.broadcast_to(l0, (n, 3)).copy()

    snapshot_of_step = {s: i for i, s in enumerate(cfg.snapshot_steps())}
    if 0 in snapshot_of_step:
        out_r[snapshot_of_step[0]][start:stop] = r
        out_l[snapshot_of_step[0]][start:stop] = l

    def rate(lv, torque_t):
        il = lv @ i_inv_t
        return -_cross(il, lv) - lv @ visc_t + torque_t

    for step in range(cfg.steps):
        t = step * dt
        if draw_noise:
            noise = (rng.standard_normal((n, 3)) * sqrt_dt) @ noise_t
        else:
            noise = 0.0
        k1 = rate(l, torque_fn(t)) * dt + noise
        k2 = rate(l + k1, torque_fn(t + dt)) * dt + noise
        l_next = l + 0.5 * (k1 + k2)
        r = r @ _rodrigues((0.5 * dt) * (l + l_next) @ i_inv_t)
        l = l_next
        slot = snapshot_of_step.get(step + 1)
        if slot is not None:
            out_r[slot][start:stop] = r
            out_l[slot][start:stop] = l


def simulate_ensemble(
    params: BodyParams,
    spec,
    cfg: SimConfig,
    workers: int | None = None,
) -> Ensemble:
    """Simulate an independent-particle ensemble from (R=identity, l=l*(0)).

    The result is bit-identical for any worker count.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    torque_fn = torque_function(params, spec)
    l0 = momentum_star(spec, 0.0) if hasattr(spec, "coefficients") else np.zeros(3)

    n = cfg.particles
    k = len(cfg.snapshot_times)
    if k == 0:
        raise ValueError("at least one snapshot time is required")
    out_r = [np.empty((n, 3, 3)) for _ in range(k)]
    out_l = [np.empty((n, 3)) for _ in range(k)]

    ranges = [(c, s, min(s + _CHUNK, n)) for c, s in enumerate(range(0, n, _CHUNK))]
    if workers == 1 or len(ranges) == 1:
        for c, s, e in ranges:
            _simulate_chunk(params, torque_fn, l0, cfg, c, s, e, out_r, out_l)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_simulate_chunk, params, torque_fn, l0, cfg, c, s, e, out_r, out_l)
                for c, s, e in ranges
            ]
            for f in futures:
                f.result()

    return Ensemble(
        times=np.asarray(cfg.snapshot_times),
        rotations=out_r,
        momenta=out_l,
        seed=cfg.seed,
        dt=cfg.dt,
    )


def write_particles_csv(
    ensemble: Ensemble, t: float, path, params_digest: str = ""
) -> None:
    """Dump one snapshot: nine row-major rotation entries then the momentum."""
    r, l = ensemble.at(t)
    flat = np.concatenate([r.reshape(len(l), 9), l], axis=1)
    header = [
        "format=phasefold.v1",
        f"# seed={ensemble.seed} dt={float(ensemble.dt)!r} t={float(t)!r} params={params_digest}",
        "r11,r12,r13,r21,r22,r23,r31,r32,r33,l1,l2,l3",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(header) + "\n")
        for row in flat:
            fh.write(",".join(repr(v) for v in row) + "\n")
