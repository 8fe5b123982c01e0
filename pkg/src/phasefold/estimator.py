"""Sample statistics on the phase group.

The group mean is the fixed point of

    mu <- exp_group( mean_i log_group(h_i o mu^-1) ) o mu,

started from the exponential of the mean raw logarithm, and iterated until
the Frobenius norm of the hatted mean log residual drops below tolerance.
The covariance collects outer products of the per-particle log residuals
``y_i = log_group(h_i o mu^-1)`` around the converged mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MeanConvergenceError
from .lie import (
    PhaseElement,
    compose,
    exp_group,
    exp_so3,
    jac_right_inv_so3,
    log_so3,
)


def log_residuals(rotations, momenta, mu: PhaseElement) -> np.ndarray:
    """log_group(h_i o mu^-1) for a stacked ensemble, as an (N, 6) array."""
    mu_rot_t = mu.rotation.T
    shifted_l = -mu.rotation @ mu.momentum
    # h_i o mu^-1 has rotation mu.R^T @ R_i and momentum R_i^T v + l_i.
    rel_r = mu_rot_t @ rotations
    rel_l = momenta + np.einsum("nji,j->ni", rotations, shifted_l)
    a = log_so3(rel_r)
    b = np.einsum("nij,nj->ni", jac_right_inv_so3(a), rel_l)
    return np.concatenate([a, b], axis=1)


def _hat_frobenius(x: np.ndarray) -> float:
    """Frobenius norm of hat6(x): sqrt(2|a|^2 + |b|^2)."""
    return float(np.sqrt(2.0 * np.sum(x[:3] ** 2) + np.sum(x[3:] ** 2)))


@dataclass(frozen=True)
class SampleMoments:
    """Converged sample mean/covariance with iteration diagnostics."""

    mean: PhaseElement
    covariance: np.ndarray
    iterations: int
    residual: float
    residual_history: tuple[float, ...]


def group_mean(
    rotations: np.ndarray,
    momenta: np.ndarray,
    tol: float = 1e-6,
    max_iter: int = 100,
) -> PhaseElement:
    """Iterative group-theoretic mean of an ensemble."""
    return _group_mean_full(rotations, momenta, tol, max_iter)[0]


def _group_mean_full(rotations, momenta, tol, max_iter):
    rotations = np.asarray(rotations, dtype=float)
    momenta = np.asarray(momenta, dtype=float)
    if rotations.ndim != 3 or len(rotations) == 0:
        raise ValueError("need a non-empty (N,3,3) rotation stack")

    # Warm start from raw logs: tail particles at the cut locus enter with
    # reduced precision, which the centered iteration then corrects.
    raw_a = log_so3(rotations, wrap_degenerate=True)
    raw_b = np.einsum("nij,nj->ni", jac_right_inv_so3(raw_a), momenta)
    mu = exp_group(np.concatenate([raw_a.mean(axis=0), raw_b.mean(axis=0)]))

    history: list[float] = []
    for iteration in range(1, max_iter + 1):
        ybar = log_residuals(rotations, momenta, mu).mean(axis=0)
        residual = _hat_frobenius(ybar)
        history.append(residual)
        if residual < tol:
            return mu, iteration, residual, tuple(history)
        mu = compose(exp_group(ybar), mu)
    raise MeanConvergenceError(
        f"group mean residual {history[-1]:.3e} after {max_iter} iterations",
        residual=history[-1],
        iterations=max_iter,
    )


def group_covariance(rotations, momenta, mu: PhaseElement) -> np.ndarray:
    """Second moment of the log residuals about the group mean."""
    y = log_residuals(np.asarray(rotations, float), np.asarray(momenta, float), mu)
    return y.T @ y / len(y)


def sample_moments(
    rotations, momenta, tol: float = 1e-6, max_iter: int = 100
) -> SampleMoments:
    """Group mean and covariance with convergence diagnostics."""
    mu, iterations, residual, history = _group_mean_full(rotations, momenta, tol, max_iter)
    cov = group_covariance(rotations, momenta, mu)
    return SampleMoments(mu, cov, iterations, residual, history)


def rotation_mean(
    rotations: np.ndarray, tol: float = 1e-6, max_iter: int = 100
) -> np.ndarray:
    """Iterative mean on the rotation group alone (same fixed-point scheme)."""
    rotations = np.asarray(rotations, dtype=float)
    if rotations.ndim != 3 or len(rotations) == 0:
        raise ValueError("need a non-empty (N,3,3) rotation stack")
    mu = exp_so3(log_so3(rotations, wrap_degenerate=True).mean(axis=0))
    last = np.inf
    for _ in range(max_iter):
        abar = log_so3(mu.T @ rotations).mean(axis=0)
        last = float(np.sqrt(2.0) * np.linalg.norm(abar))
        if last < tol:
            return mu
        # residuals live on the right of mu (mu^T R_i), so the correction
        # composes there too
        mu = mu @ exp_so3(abar)
    raise MeanConvergenceError(
        f"rotation mean residual {last:.3e} after {max_iter} iterations",
        residual=last,
        iterations=max_iter,
    )


def product_mean(rotations, momenta, tol: float = 1e-6, max_iter: int = 100):
    """Rotation mean paired with the arithmetic momentum mean.

    This is the reference statistic for methods that treat orientation and
    momentum as a direct product rather than through the group structure.
    """
    momenta = np.asarray(momenta, dtype=float)
    return rotation_mean(rotations, tol, max_iter), momenta.mean(axis=0)
