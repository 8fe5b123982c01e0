"""Second-order moment expansion of the group-valued Fokker-Planck equation.

The group mean mu and covariance Sigma of the particle distribution obey
coupled ordinary differential equations obtained by differentiating the
moment definitions under the Fokker-Planck flow, integrating by parts, and
dropping third and higher moments of the centered density.  The mean
equation is implicit,

    G1(Sigma, mu) + G2(Sigma) + G3(Sigma) + M(Sigma) (dmu/dt mu^-1)^vee = 0,
    M(Sigma) = -(I + A1(Sigma)/12),

and is solved for the left-trivialized velocity at every step; the
covariance rate assembles the four displayed contributions F1..F4.

Quadratic moment operators (exact in the second moments, because the
adjoint and algebra matrices are linear in the coordinates):

    A1(Sigma) = sum_mn Sigma_mn ad_m ad_n     (6x6),
    A2(Sigma) = sum_mn Sigma_mn E_m E_n       (4x4),

with closed forms assembled entrywise from Sigma by `sigma_blocks`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import BodyParams, TorqueLike, momentum_star, torque_function
from .errors import PropagationValidityError
from .lie import PhaseElement, compose, exp_group, little_ad, log_group, structure_constants

_EYE6 = np.eye(6)
_C = structure_constants()
_ADS = np.stack([little_ad(_EYE6[i]) for i in range(6)])  # (i, row, col)


def build_qg(params: BodyParams) -> np.ndarray:
    """6x4 matrix expressing the negated drift through the homogeneous column.

    The drift components satisfy m_i = [Q]_ij (h e4)_j - tau_i, where h e4
    stacks the momentum over 1.
    """
    q = np.zeros((6, 4))
    q[:3, :3] = -params.inertia_inv
    q[3:, :3] = params.viscous @ params.inertia_inv
    return q


def build_tau(params: BodyParams, torque: TorqueLike, t: float) -> np.ndarray:
    """Torque lift (0; N(t)) entering the drift decomposition."""
    return np.concatenate([np.zeros(3), torque_function(params, torque)(t)])


def sigma_blocks(sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Entrywise ingredients of the quadratic moment operators.

    Returns (rotation block contraction, cross block contraction, axial
    vector of the rotation/momentum cross block).
    """
    sigma = np.asarray(sigma, dtype=float)
    s = sigma[:3, :3]
    d = sigma[3:, :3]
    u = sigma[:3, 3:]
    prime = s - np.trace(s) * np.eye(3)
    second = d + d.T - 2.0 * np.trace(d) * np.eye(3)
    axial = np.array([u[2, 1] - u[1, 2], u[0, 2] - u[2, 0], u[1, 0] - u[0, 1]])
    return prime, second, axial


def a1_of_sigma(sigma: np.ndarray) -> np.ndarray:
    """6x6 second moment of the squared adjoint: sum_mn Sigma_mn ad_m ad_n."""
    prime, second, _ = sigma_blocks(sigma)
    out = np.zeros((6, 6))
    out[:3, :3] = prime
    out[3:, 3:] = prime
    out[3:, :3] = second
    return out


def a2_of_sigma(sigma: np.ndarray) -> np.ndarray:
    """4x4 second moment of the squared algebra matrix: sum_mn Sigma_mn E_m E_n."""
    prime, _, axial = sigma_blocks(sigma)
    out = np.zeros((4, 4))
    out[:3, :3] = prime
    out[:3, 3] = axial
    return out


def _homogeneous_column(mu: PhaseElement) -> np.ndarray:
    return np.concatenate([mu.momentum, [1.0]])


def _basis_action(mu: PhaseElement) -> np.ndarray:
    """Rows E_m (mu e4) for the six algebra basis matrices, shape (6, 4)."""
    se = np.zeros((6, 4))
    eye = np.eye(3)
    for m in range(3):
        se[m, :3] = np.cross(mu.momentum, eye[m])  # -e_m x l
    se[3:, :3] = eye
    return se


def g_terms(
    sigma: np.ndarray,
    mu: PhaseElement,
    params: BodyParams,
    torque: TorqueLike,
    t: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """The four contributions to the implicit mean equation.

    Returns (G1, G2, G3, M) where M is the coefficient matrix multiplying
    the left-trivialized mean velocity (M = -(I + A1/12)).
    """
    sigma = np.asarray(sigma, dtype=float)
    q = build_qg(params)
    tau = build_tau(params, torque, t)
    a1 = a1_of_sigma(sigma)
    a2 = a2_of_sigma(sigma)
    bbt = params.diffusion_matrix() @ params.diffusion_matrix().T

    p4 = _homogeneous_column(mu)
    se = _basis_action(mu)
    w = se @ q.T  # w[m] = Q (E_m mu e4)

    cross_term = np.zeros(6)
    for m in range(6):
        cross_term += little_ad(w[m]) @ sigma[:, m]

    g1 = -(q @ p4 + 0.5 * q @ (a2 @ p4) + 0.5 * cross_term + a1 @ (q @ p4) / 12.0)
    g2 = (_EYE6 + a1 / 12.0) @ tau

    g3 = 0.25 * np.einsum("ij,irj->r", bbt, _ADS)
    g3 = g3 + np.einsum("ij,irs,sj->r", bbt, _ADS, a1, optimize=True) / 48.0
    triple = np.einsum("ij,kmi,lnj,pkl->pmn", bbt, _C, _C, _C, optimize=True)
    triple = triple + np.einsum("ij,pml,kjn,lki->pmn", bbt, _C, _C, _C, optimize=True)
    g3 = g3 + np.einsum("pmn,mn->p", triple, sigma) / 48.0

    m_coeff = -(_EYE6 + a1 / 12.0)
    return g1, g2, g3, m_coeff


def mu_dot(
    sigma: np.ndarray,
    mu: PhaseElement,
    params: BodyParams,
    torque: TorqueLike,
    t: float,
    cond_limit: float = 1e6,
) -> np.ndarray:
    """Solve the implicit mean equation for the left-trivialized velocity."""
    g1, g2, g3, m_coeff = g_terms(sigma, mu, params, torque, t)
    coeff = -m_coeff
    if np.linalg.cond(coeff) >= cond_limit:
        raise PropagationValidityError(
            "mean-equation coefficient matrix is ill conditioned", time=t
        )
    return np.linalg.solve(coeff, g1 + g2 + g3)


def f_terms(
    sigma: np.ndarray,
    mu: PhaseElement,
    velocity: np.ndarray,
    params: BodyParams,
    torque: TorqueLike,
    t: float,
    symmetrize: bool = True,
) -> np.ndarray:
    """Covariance rate dSigma/dt = F1 + F2 + F3 + F4."""
    sigma = np.asarray(sigma, dtype=float)
    q = build_qg(params)
    tau = build_tau(params, torque, t)
    a1 = a1_of_sigma(sigma)
    bbt = params.diffusion_matrix() @ params.diffusion_matrix().T

    p4 = _homogeneous_column(mu)
    se = _basis_action(mu)
    w = se @ q.T

    ad_alpha = little_ad(q @ p4)
    f1 = -(0.5 * (sigma @ ad_alpha.T + ad_alpha @ sigma) + sigma @ w + w.T @ sigma)

    ad_tau = little_ad(tau)
    f2 = 0.5 * (sigma @ ad_tau.T + ad_tau @ sigma)

    f3 = bbt.copy()
    for i in range(6):
        for j in range(6):
            scale = bbt[i, j]
            if scale == 0.0:
                continue
            adi, adj = _ADS[i], _ADS[j]
            block_a = adi @ adj @ sigma
            block_b = adi @ sigma @ adj.T
            term = (block_a + block_a.T + block_b + block_b.T) / 8.0
            block_c = np.outer(_EYE6[j], a1 @ _EYE6[i])  # e_j e_i^T A1^T
            block_d = np.outer(a1 @ _EYE6[j], _EYE6[i])  # A1 e_j e_i^T
            block_e = -adj @ adi @ sigma
            block_f = -little_ad(adj @ _EYE6[i]) @ sigma
            term = term + (
                block_c + block_c.T + block_d + block_d.T
                + block_e + block_e.T + block_f + block_f.T
            ) / 24.0
            f3 = f3 + scale * term

    ad_v = little_ad(np.asarray(velocity, dtype=float))
    f4 = 0.5 * (sigma @ ad_v.T + ad_v @ sigma)

    out = f1 + f2 + f3 + f4
    if symmetrize:
        out = 0.5 * (out + out.T)
    return out


@dataclass(frozen=True)
class EomState:
    """Group mean and covariance at one time."""

    mean: PhaseElement
    covariance: np.ndarray


@dataclass(frozen=True)
class EomSeries:
    """Per-step record of the propagated group mean and covariance."""

    times: np.ndarray
    rotations: np.ndarray  # (n, 3, 3)
    momenta: np.ndarray  # (n, 3)
    covariances: np.ndarray  # (n, 6, 6)

    def index_of(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9:
            raise ValueError(f"no record at t={t}")
        return i

    def state_at(self, t: float) -> EomState:
        i = self.index_of(t)
        return EomState(
            PhaseElement(self.rotations[i], self.momenta[i]), self.covariances[i]
        )

    def mean_logs(self) -> np.ndarray:
        return log_group(PhaseElement(self.rotations, self.momenta))


def propagate_eom(
    params: BodyParams,
    spec: TorqueLike,
    dt: float,
    horizon: float,
    sigma_eig_bound: float = 1.0,
    cond_limit: float = 1e6,
) -> EomSeries:
    """Co-integrate mean and covariance by the improved Euler scheme.

    The mean update applies the exact group exponential of the averaged
    stage velocities on the left.  Propagation aborts with
    `PropagationValidityError` (carrying the partial series) once the
    covariance spectrum leaves [-1e-10, sigma_eig_bound] or the implicit
    mean equation degenerates; the truncation is only trustworthy while the
    distribution stays concentrated.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    steps = int(round(horizon / dt))
    l0 = momentum_star(spec, 0.0) if hasattr(spec, "coefficients") else np.zeros(3)
    mu = PhaseElement(np.eye(3), l0)
    sigma = np.zeros((6, 6))

    times = np.arange(steps + 1) * dt
    rotations = np.empty((steps + 1, 3, 3))
    momenta = np.empty((steps + 1, 3))
    covariances = np.empty((steps + 1, 6, 6))
    rotations[0], momenta[0], covariances[0] = mu.rotation, mu.momentum, sigma

    def partial(n):
        return EomSeries(times[:n], rotations[:n], momenta[:n], covariances[:n])

    for n in range(steps):
        t = n * dt
        try:
            v1 = mu_dot(sigma, mu, params, spec, t, cond_limit)
            s1 = f_terms(sigma, mu, v1, params, spec, t)
            mu_pred = compose(exp_group(dt * v1), mu)
            sigma_pred = sigma + dt * s1
            v2 = mu_dot(sigma_pred, mu_pred, params, spec, t + dt, cond_limit)
            s2 = f_terms(sigma_pred, mu_pred, v2, params, spec, t + dt)
        except PropagationValidityError as err:
            raise PropagationValidityError(
                str(err), time=err.time, partial=partial(n + 1)
            ) from None

        mu = compose(exp_group(0.5 * dt * (v1 + v2)), mu)
        sigma = sigma + 0.5 * dt * (s1 + s2)
        sigma = 0.5 * (sigma + sigma.T)

        # Early steps carry O(dt^3) indefiniteness (the rotation block grows
        # one order slower than the cross blocks); clip those, but treat
        # anything beyond truncation level as a genuine validity loss.
        eigvals, eigvecs = np.linalg.eigh(sigma)
        if eigvals.min() < -1e-8 or eigvals.max() > sigma_eig_bound:
            raise PropagationValidityError(
                f"covariance spectrum [{eigvals.min():.3e}, {eigvals.max():.3e}] "
                f"left the validity region at t={t + dt:.4f}",
                time=t + dt,
                partial=partial(n + 1),
            )
        if eigvals.min() < 0.0:
            sigma = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T

        rotations[n + 1], momenta[n + 1] = mu.rotation, mu.momentum
        covariances[n + 1] = sigma

    return EomSeries(times, rotations, momenta, covariances)
