"""Stability tooling for the observer error dynamics.

With ``E = R_hat R^T`` the estimation error, the observer-plus-system
closed loop reduces to an autonomous map driven only by the NED direction
sequence. Near ``E = I`` with ``E ~ I + hat(eps)`` and scalar gain ``l``
the map becomes ``eps <- eps - l P eps`` with ``P = I - p p^T``, whose
squared norm decreases by exactly ``(2l - l^2) eps^T P eps`` per step.

Given persistency of excitation over windows of ``T + 1`` samples with
level ``beta``, that decrement yields the guaranteed per-window contraction
``alpha_bar`` and per-step rate ``alpha`` computed by
:func:`convergence_rate`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize

from .errors import PersistencyError
from .observer import GainSpec
from .so3 import exp_so3

# Eigenvalues below this are treated as an exact zero (no excitation).
BETA_TOL = 1e-10


@dataclass(frozen=True)
class PEWindowStats:
    T: int
    beta: float

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"T must be a positive integer, got {self.T}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")

    @property
    def persistent(self) -> bool:
        return self.beta > 0.0


@dataclass(frozen=True)
class RateBound:
    gamma: float
    alpha_bar: float
    alpha: float


class LyapunovDecrement(NamedTuple):
    actual: float  # L_{k+1} - L_k evaluated by stepping
    predicted: float  # -gamma eps^T P eps
    residual: float


def error_rotation(r_hat: np.ndarray, r_true: np.ndarray) -> np.ndarray:
    r_true = np.asarray(r_true, dtype=float)
    return np.asarray(r_hat, dtype=float) @ np.swapaxes(r_true, -1, -2)


def error_step(e: np.ndarray, dir_ned: np.ndarray, gain) -> np.ndarray:
    """One step of the closed-loop error ``E <- exp(hat((L(Ep - p)) x Ep)) E``."""
    L = GainSpec.coerce(gain).matrix
    e = np.asarray(e, dtype=float)
    p = np.asarray(dir_ned, dtype=float)
    ep = e @ p
    omega = np.cross((ep - p) @ L.T, ep)
    return exp_so3(omega) @ e


def projector(dir_ned: np.ndarray) -> np.ndarray:
    p = np.asarray(dir_ned, dtype=float)
    return np.eye(3) - np.einsum("...i,...j->...ij", p, p)


def _check_l(l: float) -> float:
    l = float(l)
    if not 0.0 < l < 2.0:
        raise ValueError(f"scalar gain must lie in (0, 2), got {l}")
    return l


def linearized_step(eps: np.ndarray, dir_ned: np.ndarray, l: float) -> np.ndarray:
    l = _check_l(l)
    eps = np.asarray(eps, dtype=float)
    return eps - l * (projector(dir_ned) @ eps)


def lyapunov_decrement(eps: np.ndarray, dir_ned: np.ndarray, l: float) -> LyapunovDecrement:
    eps = np.asarray(eps, dtype=float)
    nxt = linearized_step(eps, dir_ned, l)
    actual = float(nxt @ nxt - eps @ eps)
    gamma = 2.0 * l - l * l
    predicted = float(-gamma * (eps @ projector(dir_ned) @ eps))
    return LyapunovDecrement(actual, predicted, actual - predicted)


def linearized_trajectory(eps0: np.ndarray, dirs: Sequence[np.ndarray], l: float) -> np.ndarray:
    """``eps_0 .. eps_n`` under the linearized dynamics, shape ``(n + 1, 3)``."""
    out = np.empty((len(dirs) + 1, 3))
    out[0] = eps0
    for k, p in enumerate(dirs):
        out[k + 1] = linearized_step(out[k], p, l)
    return out


def pe_window_betas(dirs: Sequence[np.ndarray] | np.ndarray, T: int) -> np.ndarray:
    """Smallest eigenvalue of the averaged projector for every window of ``T + 1`` samples.

    Window ``k`` covers samples ``k .. k + T``.
    """
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T}")
    d = np.asarray(dirs, dtype=float).reshape(-1, 3)
    if len(d) < T + 1:
        raise ValueError(f"need at least T + 1 = {T + 1} directions, got {len(d)}")
    proj = projector(d)
    windows = np.lib.stride_tricks.sliding_window_view(proj, T + 1, axis=0)
    avg = windows.sum(axis=-1) / (T + 1)
    betas = np.linalg.eigvalsh(avg)[:, 0]
    betas = np.where(betas < BETA_TOL, 0.0, betas)
    return np.clip(betas, 0.0, 1.0)


def pe_stats(dirs: Sequence[np.ndarray] | np.ndarray, T: int) -> PEWindowStats:
    """Persistency-of-excitation level: worst window over the whole sequence."""
    return PEWindowStats(int(T), float(np.min(pe_window_betas(dirs, T))))


def rate_objective(l: float, T: int) -> float:
    """``(2l - l^2) / (2 + l^2 T (T + 1))``; ``alpha_bar = 1 - beta (T + 1)`` times this."""
    return (2.0 * l - l * l) / (2.0 + l * l * T * (T + 1))


def convergence_rate(l: float, stats: PEWindowStats) -> RateBound:
    """Guaranteed contraction of the linearized error for scalar gain ``l``.

    Raises
    ------
    PersistencyError
        If ``stats.beta == 0``: without excitation there is no bound.
    """
    l = _check_l(l)
    if not stats.persistent:
        raise PersistencyError("PE violated, no rate bound (beta = 0)")
    T = stats.T
    gamma = 2.0 * l - l * l
    alpha_bar = 1.0 - stats.beta * (T + 1) * rate_objective(l, T)
    alpha = alpha_bar ** (1.0 / (2.0 * (1 + T)))
    return RateBound(gamma, alpha_bar, alpha)


def optimal_gain(stats: PEWindowStats, tol: float = 1e-9) -> float:
    """Scalar gain in ``(0, 2)`` that minimizes ``alpha_bar`` for window length ``T``.

    The maximizer does not depend on ``beta``, but a rate only exists when
    ``beta > 0``.
    """
    if not stats.persistent:
        raise PersistencyError("PE violated, no optimal gain (beta = 0)")
    T = stats.T
    # f is positive on (0, 2) and vanishes at both ends, so (0, 1, 2) brackets the max.
    return float(
        optimize.golden(lambda l: -rate_objective(l, T), brack=(0.0, 1.0, 2.0), tol=tol)
    )
