"""Synthetic circular-trajectory study.

A camera flies a horizontal circle centred on the NED origin, starting at the
northern-most point and heading east (clockwise seen from above). Its
optical frame is x = right, y = down, z = forward along the velocity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import observer
from .analysis import error_rotation
from .measurement import (
    DEFAULT_MIN_NORM,
    DEFAULT_MIN_VO_NORM,
    MeasurementFrame,
    RelativeTransform,
    ScaleModel,
    VelocityMode,
    VelocitySample,
    make_frame,
    synth_relative_translation,
)
from .so3 import angle_of, exp_so3, random_rotation


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    r: np.ndarray  # camera -> NED
    p: np.ndarray  # NED position, metres
    v: np.ndarray  # NED velocity, m/s


@dataclass(frozen=True)
class SimConfig:
    radius: float = 50.0
    speed: float = 2.0 * math.pi
    dt: float = 0.1
    steps: int = 4000
    scale_d: float = 1.0
    init_error_max: float = math.radians(179.0)
    runs: int = 20
    seed: int = 1
    gain: float = 0.5
    noise_dir: float = 0.0  # rad, perturbation of the VO translation direction
    noise_rot: float = 0.0  # rad, right perturbation of the VO relative rotation
    velocity_mode: VelocityMode = VelocityMode.LINEAR
    min_norm: float = DEFAULT_MIN_NORM
    min_vo_norm: float = DEFAULT_MIN_VO_NORM
    projection_period: int | None = observer.DEFAULT_PROJECTION_PERIOD
    threshold: float = 1e-3  # rad, for steps-to-convergence

    def __post_init__(self):
        for name in ("radius", "speed", "dt", "scale_d"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.steps < 1 or self.runs < 1:
            raise ValueError("steps and runs must be positive")
        if not 0.0 <= self.init_error_max <= math.pi:
            raise ValueError("init_error_max must lie in [0, pi]")
        if self.noise_dir < 0.0 or self.noise_rot < 0.0:
            raise ValueError("noise levels must be non-negative")
        object.__setattr__(self, "velocity_mode", VelocityMode(self.velocity_mode))


def camera_attitude(v: np.ndarray) -> np.ndarray:
    """Optical camera frame looking along ``v`` with image-down along NED down."""
    fwd = v / np.linalg.norm(v)
    down = np.array([0.0, 0.0, 1.0])
    right = np.cross(down, fwd)
    return np.column_stack([right, down, fwd])


def circle_trajectory(cfg: SimConfig) -> list[TrajectorySample]:
    w = cfg.speed / cfg.radius
    out = []
    for k in range(cfg.steps + 1):
        t = k * cfg.dt
        th = w * t
        p = cfg.radius * np.array([math.cos(th), math.sin(th), 0.0])
        v = cfg.speed * np.array([-math.sin(th), math.cos(th), 0.0])
        out.append(TrajectorySample(t, camera_attitude(v), p, v))
    return out


def synth_measurements(
    traj: Sequence[TrajectorySample],
    cfg: SimConfig,
    rng: int | np.random.Generator | None = None,
) -> tuple[list[RelativeTransform], list[VelocitySample]]:
    """VO relatives and GPS velocities that a perfect sensor suite would report.

    Noise, when configured, is drawn from ``rng`` (seeded from ``cfg.seed``
    by default).
    """
    if len(traj) < 2:
        raise ValueError("trajectory needs at least two samples")
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[1])
    rng = np.random.default_rng(rng)
    scale = ScaleModel(cfg.scale_d)
    rels = []
    for a, b in zip(traj[:-1], traj[1:]):
        rot = a.r.T @ b.r
        trans = synth_relative_translation(a.r, a.p, b.p, scale)
        if cfg.noise_rot > 0.0:
            rot = rot @ exp_so3(cfg.noise_rot * rng.standard_normal(3))
        if cfg.noise_dir > 0.0:
            trans = exp_so3(cfg.noise_dir * rng.standard_normal(3)) @ trans
        rels.append(RelativeTransform(rot, trans))
    vels = [VelocitySample(s.t, s.v) for s in traj]
    return rels, vels


def frames_from_stream(
    rels: Sequence[RelativeTransform],
    vels: Sequence[VelocitySample],
    mode: VelocityMode | str = VelocityMode.LINEAR,
    min_norm: float = DEFAULT_MIN_NORM,
    min_vo_norm: float = DEFAULT_MIN_VO_NORM,
) -> list[MeasurementFrame]:
    """Frames for a stream where every VO step has velocities at both ends."""
    if len(vels) < len(rels) + 1:
        raise ValueError("need one velocity sample per camera frame")
    return [
        make_frame(rel, vels[k], vels[k + 1], mode, min_norm, min_vo_norm)
        for k, rel in enumerate(rels)
    ]


def frames_for(cfg: SimConfig, traj: Sequence[TrajectorySample] | None = None):
    traj = circle_trajectory(cfg) if traj is None else traj
    rels, vels = synth_measurements(traj, cfg)
    frames = frames_from_stream(rels, vels, cfg.velocity_mode, cfg.min_norm, cfg.min_vo_norm)
    return traj, frames


@dataclass
class MonteCarloResult:
    t: np.ndarray  # (steps + 1,)
    errors: np.ndarray  # (runs, steps + 1), radians
    threshold: float
    init_rotations: np.ndarray = field(repr=False)  # (runs, 3, 3), E_0 per run

    @property
    def steps_to_threshold(self) -> list[int | None]:
        """First epoch after which each run stays below ``threshold``; ``None`` if never."""
        out = []
        for err in self.errors:
            above = np.flatnonzero(err >= self.threshold)
            if above.size == 0:
                out.append(0)
            elif above[-1] == err.size - 1:
                out.append(None)
            else:
                out.append(int(above[-1]) + 1)
        return out


def initial_errors(cfg: SimConfig) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(2)[0])
    if cfg.init_error_max == 0.0:
        return np.broadcast_to(np.eye(3), (cfg.runs, 3, 3)).copy()
    return np.stack([random_rotation(rng, cfg.init_error_max) for _ in range(cfg.runs)])


def run_monte_carlo(cfg: SimConfig) -> MonteCarloResult:
    """Run ``cfg.runs`` observers, each started from a random attitude error, on one stream."""
    traj, frames = frames_for(cfg)
    e0 = initial_errors(cfg)
    r_true = np.stack([s.r for s in traj])
    est = observer.run(e0 @ traj[0].r, frames, cfg.gain, cfg.projection_period)
    err = angle_of(error_rotation(est, r_true[:, None]))
    return MonteCarloResult(np.array([s.t for s in traj]), err.T.copy(), cfg.threshold, e0)
