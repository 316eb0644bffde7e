"""Discrete-time attitude observer fusing visual-odometry relative motion with GPS velocity."""

from .analysis import (
    PEWindowStats,
    RateBound,
    convergence_rate,
    error_rotation,
    error_step,
    linearized_step,
    lyapunov_decrement,
    optimal_gain,
    pe_stats,
    projector,
)
from .measurement import MeasurementFrame, RelativeTransform, VelocitySample, make_frame
from .observer import GainSpec, ObserverState, correction, cost, predict, step, update
from .so3 import angle_of, exp_so3, hat, log_so3, project_to_so3, vee

__version__ = "0.1.0"
