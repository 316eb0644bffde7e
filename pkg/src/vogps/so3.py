"""Rotation-group arithmetic on 3x3 matrices.

Rotations are plain ``numpy`` arrays of shape ``(..., 3, 3)`` and axis
vectors have shape ``(..., 3)``; the exp/log/hat/vee kernels broadcast over
leading axes so that batches of observers can share one code path.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

# Below this angle the Rodrigues coefficients switch to their Taylor series.
SMALL_ANGLE = 1e-8
ROTATION_TOL = 1e-9


def hat(v: np.ndarray) -> np.ndarray:
    """Map ``(..., 3)`` vectors to skew matrices with ``hat(v) @ b == cross(v, b)``."""
    v = np.asarray(v, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    zero = np.zeros_like(x)
    return np.stack(
        [
            np.stack([zero, -z, y], axis=-1),
            np.stack([z, zero, -x], axis=-1),
            np.stack([-y, x, zero], axis=-1),
        ],
        axis=-2,
    )


def vee(s: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Inverse of :func:`hat`.

    Raises
    ------
    ValueError
        If ``s`` is not skew-symmetric to within ``tol`` (Frobenius norm).
    """
    s = np.asarray(s, dtype=float)
    asym = np.linalg.norm(s + np.swapaxes(s, -1, -2), axis=(-2, -1))
    if np.any(asym >= tol):
        raise ValueError(f"matrix is not skew-symmetric (|S + S^T| = {np.max(asym):.3e})")
    return np.stack([s[..., 2, 1], s[..., 0, 2], s[..., 1, 0]], axis=-1)


def _rodrigues_coeffs(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    small = theta < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    t2 = theta * theta
    a = np.where(small, 1.0 - t2 / 6.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - t2 / 24.0, (1.0 - np.cos(safe)) / (safe * safe))
    return a, b


def exp_so3(v: np.ndarray) -> np.ndarray:
    """Exponential map from axis-angle vectors to rotation matrices (Rodrigues)."""
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v, axis=-1)
    a, b = _rodrigues_coeffs(theta)
    k = hat(v)
    return np.eye(3) + a[..., None, None] * k + b[..., None, None] * (k @ k)


def log_so3(r: np.ndarray) -> np.ndarray:
    """Logarithm of a single rotation, returned as an axis-angle vector.

    The angle lies in ``[0, pi]``. At exactly ``pi`` the axis sign is fixed so
    that its first nonzero component is positive.
    """
    r = np.asarray(r, dtype=float)
    skew = 0.5 * np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    s = np.linalg.norm(skew)  # sin(theta)
    c = 0.5 * (np.trace(r) - 1.0)  # cos(theta)
    theta = math.atan2(s, c)
    if theta < SMALL_ANGLE:
        # skew = (sin t / t) * v, and sin t / t ~ 1 - t^2/6
        return skew / (1.0 - theta * theta / 6.0)
    if theta < math.pi - 1e-6:
        return skew * (theta / s)

    # Near pi the skew part vanishes; read the axis from the symmetric part:
    # (R + R^T)/2 - cos(t) I = (1 - cos t) a a^T
    sym = 0.5 * (r + r.T) - c * np.eye(3)
    sym /= 1.0 - c
    i = int(np.argmax(np.diag(sym)))
    axis = sym[:, i] / math.sqrt(max(sym[i, i], 0.0))
    axis /= np.linalg.norm(axis)
    if s > 1e-15:
        if np.dot(axis, skew) < 0.0:
            axis = -axis
    else:
        nz = np.flatnonzero(np.abs(axis) > 1e-12)
        if nz.size and axis[nz[0]] < 0.0:
            axis = -axis
    return theta * axis


def angle_of(e: np.ndarray) -> np.ndarray | float:
    """Rotation angle of ``e`` from its distance to the identity.

    Evaluates ``acos(1 - |I - E|_F^2 / 4)``. For small angles the equivalent
    form ``2 asin(|I - E|_F / (2 sqrt 2))`` is used because ``acos`` loses
    half the significant digits near 1.
    """
    e = np.asarray(e, dtype=float)
    d2 = np.sum((np.eye(3) - e) ** 2, axis=(-2, -1))
    c = np.clip(1.0 - 0.25 * d2, -1.0, 1.0)
    s = np.clip(np.sqrt(d2) / (2.0 * math.sqrt(2.0)), 0.0, 1.0)
    out = np.where(c > 0.5, 2.0 * np.arcsin(s), np.arccos(c))
    return float(out) if out.ndim == 0 else out


def is_rotation(m: np.ndarray, tol: float = ROTATION_TOL) -> bool:
    m = np.asarray(m, dtype=float)
    if m.shape[-2:] != (3, 3) or not np.all(np.isfinite(m)):
        return False
    resid = np.linalg.norm(np.swapaxes(m, -1, -2) @ m - np.eye(3), axis=(-2, -1))
    return bool(np.all(resid < tol) and np.all(np.abs(np.linalg.det(m) - 1.0) < tol))


def check_rotation(m: np.ndarray, name: str = "rotation", tol: float = ROTATION_TOL) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if not is_rotation(m, tol):
        raise ValueError(f"{name} is not a valid rotation matrix")
    return m


def project_to_so3(m: np.ndarray) -> np.ndarray:
    """Nearest rotation in Frobenius norm (orthogonal polar factor).

    Raises
    ------
    ValueError
        If ``det(m) <= 0``; the polar factor would be a reflection.
    """
    m = np.asarray(m, dtype=float)
    det = np.linalg.det(m)
    if np.any(det <= 0.0):
        raise ValueError("cannot project a matrix with non-positive determinant onto SO(3)")
    u, _, vt = np.linalg.svd(m)
    # det(m) > 0 means det(u @ vt) = +1 already, but guard rounding anyway.
    d = np.sign(np.linalg.det(u @ vt))
    u = u.copy()
    u[..., :, 2] *= d[..., None]
    return u @ vt


def random_rotation(rng: int | np.random.Generator | None, max_angle: float) -> np.ndarray:
    """Rotation with a uniformly random axis and an angle uniform on ``(0, max_angle]``."""
    if not 0.0 < max_angle <= math.pi:
        raise ValueError(f"max_angle must lie in (0, pi], got {max_angle}")
    rng = np.random.default_rng(rng)
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    angle = max_angle * (1.0 - rng.random())
    return exp_so3(angle * axis)


class EulerAngles(NamedTuple):
    roll: float
    pitch: float
    yaw: float
    gimbal_locked: bool = False


def euler_to_rotation(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """ZYX composition ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


def rotation_to_euler(r: np.ndarray, lock_tol: float = 1e-6) -> EulerAngles:
    """Roll, pitch, yaw (radians) in the ZYX convention used for NED attitude.

    Within ``lock_tol`` of pitch = +-pi/2 the yaw is set to zero and the
    remaining rotation is reported as roll, with ``gimbal_locked=True``.
    """
    r = np.asarray(r, dtype=float)
    pitch = math.asin(max(-1.0, min(1.0, -r[2, 0])))
    if abs(abs(pitch) - math.pi / 2) < lock_tol:
        # r[0,1] = sin(r)sin(p)cos(y) - cos(r)sin(y), r[1,1] = sin(r)sin(p)sin(y) + cos(r)cos(y)
        roll = math.atan2(math.copysign(1.0, pitch) * r[0, 1], r[1, 1])
        return EulerAngles(roll, pitch, 0.0, True)
    roll = math.atan2(r[2, 1], r[2, 2])
    yaw = math.atan2(r[1, 0], r[0, 0])
    return EulerAngles(roll, pitch, yaw)
