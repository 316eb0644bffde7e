"""Discrete-time gradient attitude observer.

One step of the observer is

    R_hat <- exp(hat(omega)) @ R_hat @ R_rel,
    omega  = (L (R_hat p_c - p_n)) x (R_hat p_c)

where ``p_c`` is the VO translation direction in the camera frame, ``p_n``
the GPS displacement direction in NED and ``R_rel`` the VO relative rotation.
``omega`` is the descent direction of the cost
``(R_hat p_c - p_n)^T L (R_hat p_c - p_n)`` under the right-invariant metric.

The same update can be split into a prediction at VO rate and a correction
at GPS rate (:func:`predict` / :func:`update`).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .measurement import MeasurementFrame, RelativeTransform
from .so3 import check_rotation, exp_so3, project_to_so3

DEFAULT_PROJECTION_PERIOD = 256


@dataclass(frozen=True)
class GainSpec:
    """Observer gain ``L``; symmetric positive definite.

    Built from a scalar ``l`` the gain is ``l * I`` and ``l`` must lie in
    ``(0, 2)``, the range over which the convergence-rate bound holds.
    """

    matrix: np.ndarray
    scalar: float | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise ValueError("gain must be a finite 3x3 matrix")
        if np.max(np.abs(m - m.T)) > 1e-12:
            raise ValueError("gain matrix must be symmetric")
        if np.min(np.linalg.eigvalsh(m)) <= 0.0:
            raise ValueError("gain matrix must be positive definite")
        if self.scalar is not None and not 0.0 < self.scalar < 2.0:
            raise ValueError(f"scalar gain must lie in (0, 2), got {self.scalar}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_scalar(cls, l: float) -> "GainSpec":
        l = float(l)
        if not 0.0 < l < 2.0:
            raise ValueError(f"scalar gain must lie in (0, 2), got {l}")
        return cls(l * np.eye(3), l)

    @classmethod
    def coerce(cls, value: "GainSpec | float | np.ndarray") -> "GainSpec":
        if isinstance(value, GainSpec):
            return value
        arr = np.asarray(value, dtype=float)
        if arr.ndim == 0:
            return cls.from_scalar(float(arr))
        return cls(arr)


@dataclass(frozen=True)
class ObserverState:
    """Committed estimate ``r_hat`` and the VO-propagated estimate ``r_hat_pred``.

    After :func:`step` or :func:`update` the two coincide. Between GPS epochs
    :func:`predict` advances only ``r_hat_pred``, which is then the latest
    estimate (:attr:`estimate`).
    """

    r_hat: np.ndarray
    r_hat_pred: np.ndarray
    k: int = 0
    compositions_since_projection: int = 0

    @classmethod
    def initial(cls, r0: np.ndarray | None = None) -> "ObserverState":
        r0 = np.eye(3) if r0 is None else check_rotation(r0, "initial estimate")
        return cls(r0, r0)

    @property
    def estimate(self) -> np.ndarray:
        return self.r_hat_pred


def _directions(r_hat, dir_cam, dir_ned):
    y = r_hat @ np.asarray(dir_cam, dtype=float)
    return y, y - np.asarray(dir_ned, dtype=float)


def cost(r_hat: np.ndarray, dir_cam: np.ndarray, dir_ned: np.ndarray, gain) -> float:
    L = GainSpec.coerce(gain).matrix
    _, resid = _directions(np.asarray(r_hat, dtype=float), dir_cam, dir_ned)
    return np.einsum("...i,ij,...j->...", resid, L, resid)


def correction(r_hat: np.ndarray, dir_cam: np.ndarray, dir_ned: np.ndarray, gain) -> np.ndarray:
    """Correction vector ``(L (R_hat p_c - p_n)) x (R_hat p_c)``.

    Broadcasts over a leading batch of estimates. Left-multiplying the
    estimate by ``exp_so3`` of this vector rotates ``R_hat p_c`` toward
    ``p_n``.
    """
    L = GainSpec.coerce(gain).matrix
    y, resid = _directions(np.asarray(r_hat, dtype=float), dir_cam, dir_ned)
    return np.cross(resid @ L.T, y)


def _maybe_project(r: np.ndarray, count: int, period: int | None) -> tuple[np.ndarray, int]:
    if period is not None and count >= period:
        return project_to_so3(r), 0
    return r, count


def step(
    state: ObserverState,
    frame: MeasurementFrame,
    gain,
    projection_period: int | None = DEFAULT_PROJECTION_PERIOD,
) -> ObserverState:
    """Single-stage update with synchronized VO and GPS data.

    A frame without a direction pair only propagates the estimate through
    the relative rotation.
    """
    r = state.r_hat
    if frame.valid:
        r = exp_so3(correction(r, frame.dir_cam, frame.dir_ned, gain)) @ r
    r = r @ frame.rel.rot
    r, count = _maybe_project(r, state.compositions_since_projection + 1, projection_period)
    return ObserverState(r, r, state.k + 1, count)


def predict(
    state: ObserverState,
    rel: RelativeTransform,
    projection_period: int | None = DEFAULT_PROJECTION_PERIOD,
) -> ObserverState:
    r = state.r_hat_pred @ rel.rot
    r, count = _maybe_project(r, state.compositions_since_projection + 1, projection_period)
    return replace(state, r_hat_pred=r, k=state.k + 1, compositions_since_projection=count)


def update(state: ObserverState, dir_cam: np.ndarray, dir_ned: np.ndarray, gain) -> ObserverState:
    """Commit a GPS correction to the predicted estimate.

    ``dir_cam`` must be expressed in the camera frame that ``r_hat_pred``
    refers to, i.e. the frame reached by the latest :func:`predict`.
    """
    r = state.r_hat_pred
    r = exp_so3(correction(r, dir_cam, dir_ned, gain)) @ r
    return replace(state, r_hat=r, r_hat_pred=r)


def run(
    r_hat0: np.ndarray,
    frames: Sequence[MeasurementFrame],
    gain,
    projection_period: int | None = DEFAULT_PROJECTION_PERIOD,
) -> np.ndarray:
    """Iterate :func:`step` over ``frames`` for one or many initial estimates.

    ``r_hat0`` may be a single rotation or a ``(B, 3, 3)`` batch; every
    member sees the same frames. ``gain`` is either one gain or a sequence
    with one gain per frame. Returns the estimates at every epoch, shape
    ``(len(frames) + 1,) + r_hat0.shape``.
    """
    r = np.array(r_hat0, dtype=float)
    gains = _per_step_gains(gain, len(frames))
    out = np.empty((len(frames) + 1,) + r.shape)
    out[0] = r
    count = 0
    for k, (frame, g) in enumerate(zip(frames, gains)):
        if frame.valid:
            r = exp_so3(correction(r, frame.dir_cam, frame.dir_ned, g)) @ r
        r = r @ frame.rel.rot
        r, count = _maybe_project(r, count + 1, projection_period)
        out[k + 1] = r
    return out


def _per_step_gains(gain, n: int) -> Iterable[GainSpec]:
    if isinstance(gain, (GainSpec, float, int)) or np.ndim(gain) in (0, 2):
        g = GainSpec.coerce(gain)
        return [g] * n
    gains = [GainSpec.coerce(g) for g in gain]
    if len(gains) != n:
        raise ValueError(f"expected {n} per-step gains, got {len(gains)}")
    return gains
