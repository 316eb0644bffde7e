"""Turn VO relative transforms and GPS velocities into direction pairs.

The observer only ever sees unit directions: the VO translation normalized
in the camera frame, and the GPS displacement normalized in NED. Dividing out
the norms removes the unknown monocular scale and the GPS time step.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .so3 import check_rotation

DEFAULT_MIN_NORM = 0.05  # metres of NED displacement
DEFAULT_MIN_VO_NORM = 1e-4  # VO units


class VelocityMode(str, enum.Enum):
    CONSTANT = "constant"
    LINEAR = "linear"


@dataclass(frozen=True)
class RelativeTransform:
    """VO output for one camera step: rotation and translation of frame k+1 in frame k.

    ``trans`` carries the arbitrary monocular scale.
    """

    rot: np.ndarray
    trans: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rot", check_rotation(self.rot, "relative rotation"))
        trans = np.asarray(self.trans, dtype=float).reshape(3)
        if not np.all(np.isfinite(trans)):
            raise ValueError("relative translation must be finite")
        object.__setattr__(self, "trans", trans)

    def scaled(self, c: float) -> "RelativeTransform":
        return RelativeTransform(self.rot, c * self.trans)


@dataclass(frozen=True)
class VelocitySample:
    t: float
    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float).reshape(3)
        if not (np.isfinite(self.t) and np.all(np.isfinite(v))):
            raise ValueError("velocity sample must be finite")
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class MeasurementFrame:
    rel: RelativeTransform
    dir_cam: np.ndarray | None = field(default=None)
    dir_ned: np.ndarray | None = field(default=None)

    @property
    def valid(self) -> bool:
        return self.dir_cam is not None and self.dir_ned is not None


@dataclass(frozen=True)
class ScaleModel:
    d: float = 1.0

    def __post_init__(self):
        if not self.d > 0.0:
            raise ValueError(f"scale d must be positive, got {self.d}")


def displacement_from_velocity(
    v_k: VelocitySample,
    v_k1: VelocitySample,
    mode: VelocityMode | str = VelocityMode.LINEAR,
) -> np.ndarray:
    """Approximate NED displacement between two GPS epochs.

    ``constant`` integrates the first velocity over the interval; ``linear``
    uses the trapezoid (mean of the two samples).
    """
    mode = VelocityMode(mode)
    dt = v_k1.t - v_k.t
    if not dt > 0.0:
        raise ValueError(f"timestamps must be strictly increasing ({v_k.t} -> {v_k1.t})")
    if mode is VelocityMode.CONSTANT:
        v_bar = v_k.v
    else:
        v_bar = 0.5 * (v_k.v + v_k1.v)
    return dt * v_bar


def normalize_direction(w: np.ndarray, min_norm: float) -> np.ndarray | None:
    """Unit vector along ``w``, or ``None`` when ``|w| < min_norm``."""
    w = np.asarray(w, dtype=float)
    n = np.linalg.norm(w)
    if not n >= min_norm or n == 0.0:
        return None
    return w / n


def make_frame(
    rel: RelativeTransform,
    v_k: VelocitySample | None,
    v_k1: VelocitySample | None,
    mode: VelocityMode | str = VelocityMode.LINEAR,
    min_norm: float = DEFAULT_MIN_NORM,
    min_vo_norm: float = DEFAULT_MIN_VO_NORM,
) -> MeasurementFrame:
    """Pair the VO translation direction with the GPS displacement direction.

    Missing velocity samples, or either displacement falling below its
    threshold, give a frame that only carries the relative rotation.
    """
    dir_cam = normalize_direction(rel.trans, min_vo_norm)
    dir_ned = None
    if v_k is not None and v_k1 is not None:
        dir_ned = normalize_direction(displacement_from_velocity(v_k, v_k1, mode), min_norm)
    if dir_cam is None or dir_ned is None:
        return MeasurementFrame(rel)
    return MeasurementFrame(rel, dir_cam, dir_ned)


def synth_relative_translation(
    r_k: np.ndarray, p_k: np.ndarray, p_k1: np.ndarray, scale: ScaleModel
) -> np.ndarray:
    """VO translation ``R_k^T (p_{k+1} - p_k) / d`` for a camera at attitude ``r_k``."""
    r_k = np.asarray(r_k, dtype=float)
    return r_k.T @ (np.asarray(p_k1, dtype=float) - np.asarray(p_k, dtype=float)) / scale.d


def compose_relatives(rels: Sequence[RelativeTransform]) -> RelativeTransform:
    """Chain consecutive relatives into the transform from the first to the last frame."""
    rot = np.eye(3)
    trans = np.zeros(3)
    for rel in rels:
        trans = trans + rot @ rel.trans
        rot = rot @ rel.rot
    return RelativeTransform(rot, trans)
