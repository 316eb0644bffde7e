"""Run the observer over recorded VO and GPS logs.

VO rows drive prediction at camera rate. GPS rows are matched to camera
frames by ``k``; each pair of consecutive GPS samples yields one correction,
applied when the prediction reaches the later sample's frame. The camera
direction for that correction is the VO translation accumulated between the
two GPS frames, so a GPS stream slower than the camera, or with gaps, is
handled without special cases.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import analysis, observer
from .csvio import GpsRecord, TruthRecord, VoRecord
from .errors import SchemaError
from .measurement import (
    DEFAULT_MIN_NORM,
    DEFAULT_MIN_VO_NORM,
    RelativeTransform,
    VelocityMode,
    displacement_from_velocity,
    normalize_direction,
)


class GainMode(str, enum.Enum):
    FIXED = "fixed"
    OPTIMAL = "optimal"


@dataclass(frozen=True)
class RunConfig:
    gain: float | np.ndarray = 0.5
    velocity_mode: VelocityMode = VelocityMode.LINEAR
    min_norm: float = DEFAULT_MIN_NORM
    min_vo_norm: float = DEFAULT_MIN_VO_NORM
    projection_period: int | None = observer.DEFAULT_PROJECTION_PERIOD
    gain_mode: GainMode = GainMode.FIXED
    pe_window: int = 500  # directions per window, i.e. T + 1

    def __post_init__(self):
        object.__setattr__(self, "velocity_mode", VelocityMode(self.velocity_mode))
        object.__setattr__(self, "gain_mode", GainMode(self.gain_mode))
        observer.GainSpec.coerce(self.gain)
        if not (self.min_norm > 0.0 and self.min_vo_norm > 0.0):
            raise ValueError("thresholds must be positive")
        if self.pe_window < 2:
            raise ValueError("pe_window must be at least 2")
        if self.projection_period is not None and self.projection_period < 1:
            raise ValueError("projection_period must be positive")


@dataclass(frozen=True)
class ReplayEpoch:
    k: int
    t: float
    r_hat: np.ndarray
    gain: float | None  # scalar gain used by a correction at this frame


class _GainSchedule:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.fixed = observer.GainSpec.coerce(cfg.gain)
        self.dirs: list[np.ndarray] = []

    def next(self, dir_ned: np.ndarray) -> observer.GainSpec:
        self.dirs.append(dir_ned)
        n = self.cfg.pe_window
        if self.cfg.gain_mode is GainMode.FIXED or len(self.dirs) < n:
            return self.fixed
        stats = analysis.pe_stats(self.dirs[-n:], n - 1)
        if not stats.persistent:
            return self.fixed
        return observer.GainSpec.from_scalar(analysis.optimal_gain(stats))


def _frame_times(vo: Sequence[VoRecord], gps_by_k, truth_by_k) -> list[float]:
    times = [r.t for r in vo]
    last = vo[-1].k + 1
    if last in gps_by_k:
        times.append(gps_by_k[last].t)
    elif last in truth_by_k:
        times.append(truth_by_k[last].t)
    elif len(vo) > 1:
        times.append(2 * vo[-1].t - vo[-2].t)
    else:
        times.append(vo[-1].t)
    return times


def replay(
    vo: Sequence[VoRecord],
    gps: Sequence[GpsRecord],
    cfg: RunConfig = RunConfig(),
    r0: np.ndarray | None = None,
    truth: Sequence[TruthRecord] = (),
) -> list[ReplayEpoch]:
    """Estimate the attitude at every camera frame covered by ``vo``.

    Returns ``len(vo) + 1`` epochs, for frames ``vo[0].k`` through
    ``vo[-1].k + 1``.
    """
    if not vo:
        raise SchemaError("VO log is empty")
    for a, b in zip(vo, vo[1:]):
        if b.k != a.k + 1:
            raise SchemaError(f"VO log must have consecutive k (gap {a.k} -> {b.k})")
    gps_by_k = {g.k: g for g in gps}
    truth_by_k = {r.k: r for r in truth}
    times = _frame_times(vo, gps_by_k, truth_by_k)
    schedule = _GainSchedule(cfg)

    state = observer.ObserverState.initial(r0)
    anchor: GpsRecord | None = None
    acc = RelativeTransform(np.eye(3), np.zeros(3))  # VO motion since the anchor frame
    out = []
    for i in range(len(vo) + 1):
        k = vo[0].k + i
        used = None
        g = gps_by_k.get(k)
        if g is not None:
            if anchor is not None:
                dir_cam = normalize_direction(acc.trans, cfg.min_vo_norm)
                disp = displacement_from_velocity(anchor.sample, g.sample, cfg.velocity_mode)
                dir_ned = normalize_direction(disp, cfg.min_norm)
                if dir_cam is not None and dir_ned is not None:
                    gain = schedule.next(dir_ned)
                    # express the anchor-frame direction in the current frame
                    state = observer.update(state, acc.rot.T @ dir_cam, dir_ned, gain)
                    used = gain.scalar
            anchor = g
            acc = RelativeTransform(np.eye(3), np.zeros(3))
        out.append(ReplayEpoch(k, times[i], state.estimate, used))
        if i < len(vo):
            rel = vo[i].rel
            state = observer.predict(state, rel, cfg.projection_period)
            if anchor is not None:
                acc = RelativeTransform(acc.rot @ rel.rot, acc.trans + acc.rot @ rel.trans)
    return out
