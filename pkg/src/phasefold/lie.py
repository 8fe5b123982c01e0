"""Exact Lie-group operations for SO(3) and the rotation/momentum phase group.

The phase group collects a body orientation R and an angular momentum l into
the 4x4 matrix ``[[R^T, l], [0, 1]]``.  Its algebra is parameterized by
6-vectors ``x = (a; b)`` (rotational part first) through

    hat6((a; b)) = [[-hat3(a), b], [0, 0]],

so that the left-trivialized velocity of a trajectory h(t) satisfies
``vee6(dh/dt h^-1) = (omega; dl/dt + omega x l)`` with the body angular
velocity ``omega = vee3(R^T dR/dt)``.  The minus sign in hat6 is forced by
that identity and fixes every basis-dependent quantity below (little_ad,
structure constants, the quadratic moment operators built on top of them).

All operations broadcast over leading axes: a ``(..., 3)`` input yields a
``(..., 3, 3)`` rotation stack, and `PhaseElement` fields may themselves be
stacked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateAngleError

# Angle below which trigonometric coefficient functions switch to their
# second-order Taylor form (avoids 0/0 at the origin).
_SMALL_ANGLE = 1e-6
# Half-width of the cut-locus sliver in which logarithms refuse to answer.
_PI_MARGIN = 1e-6

_EYE3 = np.eye(3)
_EYE6 = np.eye(6)


def _mv(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Matrix-vector product broadcasting over leading axes."""
    return (m @ v[..., None])[..., 0]


def hat3(v) -> np.ndarray:
    """Skew-symmetric matrix of a 3-vector: hat3(v) @ w == cross(v, w)."""
    v = np.asarray(v, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    zero = np.zeros_like(x)
    rows = np.stack(
        [
            np.stack([zero, -z, y], axis=-1),
            np.stack([z, zero, -x], axis=-1),
            np.stack([-y, x, zero], axis=-1),
        ],
        axis=-2,
    )
    return rows


def vee3(m) -> np.ndarray:
    """Inverse of `hat3` (reads the three independent entries)."""
    m = np.asarray(m, dtype=float)
    return np.stack([m[..., 2, 1], m[..., 0, 2], m[..., 1, 0]], axis=-1)


def _angle(v: np.ndarray) -> np.ndarray:
    return np.linalg.norm(v, axis=-1)


def _sin_over(theta: np.ndarray) -> np.ndarray:
    """sin(t)/t with Taylor fallback."""
    small = theta < _SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    return np.where(small, 1.0 - theta * theta / 6.0, np.sin(safe) / safe)


def _one_minus_cos_over_sq(theta: np.ndarray) -> np.ndarray:
    """(1 - cos t)/t^2 with Taylor fallback."""
    small = theta < _SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    general = 2.0 * np.sin(safe / 2.0) ** 2 / (safe * safe)
    return np.where(small, 0.5 - theta * theta / 24.0, general)


def _theta_minus_sin_over_cube(theta: np.ndarray) -> np.ndarray:
    """(t - sin t)/t^3 with Taylor fallback."""
    small = theta < _SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    general = (safe - np.sin(safe)) / (safe * safe * safe)
    return np.where(small, 1.0 / 6.0 - theta * theta / 120.0, general)


def _jr_inv_coeff(theta: np.ndarray) -> np.ndarray:
    """Coefficient of hat(a)^2 in the inverse right Jacobian."""
    small = theta < _SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    general = 1.0 / (safe * safe) - (1.0 + np.cos(safe)) / (2.0 * safe * np.sin(safe))
    return np.where(small, 1.0 / 12.0 + theta * theta / 720.0, general)


def _jr_inv_coeff_deriv(theta: np.ndarray) -> np.ndarray:
    """d/dt of `_jr_inv_coeff`; series below 1e-2 to dodge cancellation."""
    small = theta < 1e-2
    safe = np.where(small, 1.0, theta)
    cot_half = 1.0 / np.tan(safe / 2.0)
    u = 0.5 * safe * cot_half
    u_prime = 0.5 * cot_half - 0.25 * safe * (1.0 + cot_half * cot_half)
    general = -u_prime / (safe * safe) - 2.0 * (1.0 - u) / (safe ** 3)
    series = theta / 360.0 + theta ** 3 / 7560.0
    return np.where(small, series, general)


def exp_so3(a) -> np.ndarray:
    """Rotation matrix for an axis-angle vector (Rodrigues form)."""
    a = np.asarray(a, dtype=float)
    theta = _angle(a)
    k = hat3(a)
    s = _sin_over(theta)[..., None, None]
    c = _one_minus_cos_over_sq(theta)[..., None, None]
    return _EYE3 + s * k + c * (k @ k)


def _cut_locus_axis(r: np.ndarray, theta: float) -> np.ndarray:
    """Axis near angle pi from the symmetric part (reduced precision).

    Uses (R + R^T)/2 = cos(theta) I + (1 - cos(theta)) n n^T; the largest
    diagonal picks the dominant component, off-diagonals fix relative signs.
    The overall sign is ambiguous at the cut locus.
    """
    sym = 0.5 * (r + r.T)
    cos_theta = np.cos(theta)
    outer = (sym - cos_theta * np.eye(3)) / (1.0 - cos_theta)
    k = int(np.argmax(np.diagonal(outer)))
    axis = outer[:, k] / np.sqrt(max(outer[k, k], 1e-300))
    return axis / np.linalg.norm(axis)


def log_so3(r, wrap_degenerate: bool = False) -> np.ndarray:
    """Principal axis-angle vector of a rotation matrix.

    Raises `DegenerateAngleError` when the angle falls within 1e-6 of pi;
    the error carries the axis estimated from the symmetric part (reduced
    precision near the cut locus).  ``wrap_degenerate=True`` instead returns
    that reduced-precision logarithm, which is what large-ensemble
    statistics want for the occasional tail particle.
    """
    r = np.asarray(r, dtype=float)
    w = vee3(r - np.swapaxes(r, -1, -2)) / 2.0  # sin(theta) * axis
    trace = np.trace(r, axis1=-2, axis2=-1)
    sin_theta = np.linalg.norm(w, axis=-1)
    cos_theta = (trace - 1.0) / 2.0
    theta = np.arctan2(sin_theta, cos_theta)

    beyond = theta >= np.pi - _PI_MARGIN
    if np.any(beyond) and not wrap_degenerate:
        idx = int(np.argmax(beyond))
        flat_r = r.reshape(-1, 3, 3)[idx] if r.ndim > 2 else r
        flat_t = float(np.ravel(theta)[idx])
        raise DegenerateAngleError(
            f"rotation angle {flat_t:.9f} is within {_PI_MARGIN} of pi",
            angle=flat_t,
            axis=_cut_locus_axis(flat_r, flat_t),
        )

    small = theta < 1e-4
    safe_sin = np.where(small, 1.0, sin_theta)
    scale = np.where(small, 0.5 + theta * theta / 12.0, theta / (2.0 * safe_sin))
    out = 2.0 * scale[..., None] * w

    if np.any(beyond):
        flat_out = out.reshape(-1, 3)
        flat_r = r.reshape(-1, 3, 3)
        flat_t = np.ravel(theta)
        for idx in np.flatnonzero(np.ravel(beyond)):
            flat_out[idx] = flat_t[idx] * _cut_locus_axis(flat_r[idx], flat_t[idx])
        out = flat_out.reshape(out.shape)
    return out


def jac_right_so3(a) -> np.ndarray:
    """Right Jacobian of the exponential parameterization of SO(3)."""
    a = np.asarray(a, dtype=float)
    theta = _angle(a)
    k = hat3(a)
    c1 = _one_minus_cos_over_sq(theta)[..., None, None]
    c2 = _theta_minus_sin_over_cube(theta)[..., None, None]
    return _EYE3 - c1 * k + c2 * (k @ k)


def jac_left_so3(a) -> np.ndarray:
    """Left Jacobian of SO(3); equals ``jac_right_so3(-a)``."""
    a = np.asarray(a, dtype=float)
    theta = _angle(a)
    k = hat3(a)
    c1 = _one_minus_cos_over_sq(theta)[..., None, None]
    c2 = _theta_minus_sin_over_cube(theta)[..., None, None]
    return _EYE3 + c1 * k + c2 * (k @ k)


def jac_right_inv_so3(a) -> np.ndarray:
    """Closed-form inverse of the right Jacobian of SO(3)."""
    a = np.asarray(a, dtype=float)
    theta = _angle(a)
    k = hat3(a)
    c = _jr_inv_coeff(theta)[..., None, None]
    return _EYE3 + 0.5 * k + c * (k @ k)


def jac_right_inv_partial(a, axis: int) -> np.ndarray:
    """Partial derivative of the inverse right Jacobian along one coordinate.

    ``axis`` is the 0-based coordinate index (0..2).
    """
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    a = np.asarray(a, dtype=float)
    theta = _angle(a)
    k = hat3(a)
    ek = hat3(_EYE3[axis])
    c = _jr_inv_coeff(theta)[..., None, None]
    cp = _jr_inv_coeff_deriv(theta)
    # d theta / d a_axis = a_axis / theta (0 at the origin by symmetry).
    safe = np.where(theta < _SMALL_ANGLE, 1.0, theta)
    dtheta = np.where(theta < _SMALL_ANGLE, 0.0, a[..., axis] / safe)
    return 0.5 * ek + c * (ek @ k + k @ ek) + (cp * dtheta)[..., None, None] * (k @ k)


@dataclass(frozen=True)
class PhaseElement:
    """Group element pairing an orientation with an angular momentum.

    ``rotation`` is a (stack of) 3x3 special orthogonal matrix, ``momentum``
    the matching (stack of) 3-vectors.  The 4x4 matrix form places the
    transposed rotation in the upper-left block and the momentum in the
    upper-right column.
    """

    rotation: np.ndarray
    momentum: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        l = np.asarray(self.momentum, dtype=float)
        if r.shape[-2:] != (3, 3) or l.shape[-1:] != (3,):
            raise ValueError("rotation must be (...,3,3) and momentum (...,3)")
        err = np.abs(np.swapaxes(r, -1, -2) @ r - _EYE3).max()
        if err > 1e-9:
            raise ValueError(f"rotation is not orthonormal (|R^T R - I| = {err:.3e})")
        det = np.linalg.det(r)
        if np.abs(det - 1.0).max() > 1e-9:
            raise ValueError("rotation must have determinant +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "momentum", l)

    @classmethod
    def identity(cls) -> "PhaseElement":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m) -> "PhaseElement":
        m = np.asarray(m, dtype=float)
        if m.shape[-2:] != (4, 4):
            raise ValueError("expected a (...,4,4) matrix")
        return cls(np.swapaxes(m[..., :3, :3], -1, -2), m[..., :3, 3])

    def as_matrix(self) -> np.ndarray:
        batch = np.broadcast_shapes(self.rotation.shape[:-2], self.momentum.shape[:-1])
        m = np.zeros(batch + (4, 4))
        m[..., :3, :3] = np.swapaxes(self.rotation, -1, -2)
        m[..., :3, 3] = self.momentum
        m[..., 3, 3] = 1.0
        return m


def compose(h1: PhaseElement, h2: PhaseElement) -> PhaseElement:
    """Group product (4x4 matrix product of the two representations)."""
    r = h2.rotation @ h1.rotation
    l = _mv(np.swapaxes(h1.rotation, -1, -2), h2.momentum) + h1.momentum
    return PhaseElement(r, l)


def inverse(h: PhaseElement) -> PhaseElement:
    """Group inverse."""
    rt = np.swapaxes(h.rotation, -1, -2)
    return PhaseElement(rt, -_mv(h.rotation, h.momentum))


def hat6(x) -> np.ndarray:
    """4x4 algebra matrix of a 6-vector (a; b)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 6:
        raise ValueError("expected a (...,6) vector")
    m = np.zeros(x.shape[:-1] + (4, 4))
    m[..., :3, :3] = -hat3(x[..., :3])
    m[..., :3, 3] = x[..., 3:]
    return m


def vee6(m) -> np.ndarray:
    """Inverse of `hat6`; rejects matrices with a non-skew upper-left block."""
    m = np.asarray(m, dtype=float)
    if m.shape[-2:] != (4, 4):
        raise ValueError("expected a (...,4,4) matrix")
    block = m[..., :3, :3]
    skew_err = np.abs(block + np.swapaxes(block, -1, -2)).max()
    if skew_err > 1e-9:
        raise ValueError(f"upper-left block is not skew-symmetric ({skew_err:.3e})")
    return np.concatenate([-vee3(block), m[..., :3, 3]], axis=-1)


def exp_group(x) -> PhaseElement:
    """Group exponential of a 6-vector (a; b).

    The rotation slot receives exp_so3(a) and the momentum slot the left
    Jacobian of -a applied to b (the translation part of the 4x4 matrix
    exponential of hat6(x)).
    """
    x = np.asarray(x, dtype=float)
    a = x[..., :3]
    b = x[..., 3:]
    return PhaseElement(exp_so3(a), _mv(jac_left_so3(-a), b))


def log_group(h: PhaseElement) -> np.ndarray:
    """Group logarithm; requires the rotation angle to stay below pi."""
    a = log_so3(h.rotation)
    b = _mv(jac_right_inv_so3(a), h.momentum)
    shape = np.broadcast_shapes(a.shape, b.shape)
    return np.concatenate(
        [np.broadcast_to(a, shape), np.broadcast_to(b, shape)], axis=-1
    )


def little_ad(x) -> np.ndarray:
    """6x6 matrix of the adjoint action of hat6(x) on the algebra.

    Closed form in this basis: ``[[-hat3(a), 0], [-hat3(b), -hat3(a)]]``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 6:
        raise ValueError("expected a (...,6) vector")
    ka = hat3(x[..., :3])
    kb = hat3(x[..., 3:])
    m = np.zeros(x.shape[:-1] + (6, 6))
    m[..., :3, :3] = -ka
    m[..., 3:, :3] = -kb
    m[..., 3:, 3:] = -ka
    return m


def structure_constants() -> np.ndarray:
    """Rank-3 tensor C[k, i, j] with [E_i, E_j] = sum_k C[k,i,j] E_k."""
    ads = np.stack([little_ad(_EYE6[i]) for i in range(6)])  # (i, k, j)
    return ads.transpose(1, 0, 2).copy()


def _det_jac_left_so3(theta: np.ndarray) -> np.ndarray:
    """det of the SO(3) left Jacobian: 2(1 - cos t)/t^2."""
    return 2.0 * _one_minus_cos_over_sq(theta)


def det_jac_left(x) -> np.ndarray:
    """|det| of the 6x6 left Jacobian of the phase group at coordinates x.

    The Jacobian is block-triangular with two copies of the SO(3) Jacobian
    on the diagonal, so the determinant depends only on the rotation angle.
    """
    x = np.asarray(x, dtype=float)
    theta = _angle(x[..., :3])
    if np.any(theta >= np.pi):
        raise DegenerateAngleError(
            "rotation coordinate at or beyond the cut locus",
            angle=float(np.max(theta)),
        )
    d = _det_jac_left_so3(theta)
    return d * d
