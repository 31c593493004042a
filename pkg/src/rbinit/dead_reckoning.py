"""Mean and covariance propagation from dead-reckoning increments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from rbinit.state import ZERO_STATE, StateVector, check_covariance, rotation, symmetrize


@dataclass(frozen=True)
class DeadReckoningIncrement:
    """Agent-frame displacement ``[dx, dy, dz]`` and heading change with error covariance ``Q``."""

    dx: float
    dy: float
    dz: float
    dtheta: float
    Q: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))

    def __post_init__(self):
        vals = (self.dx, self.dy, self.dz, self.dtheta)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite increment {vals}")
        object.__setattr__(self, "Q", check_covariance(self.Q, "increment Q"))

    @classmethod
    def from_diag(cls, u, q_diag=None) -> DeadReckoningIncrement:
        Q = np.zeros((4, 4)) if q_diag is None else np.diag(np.asarray(q_diag, dtype=float))
        dx, dy, dz, dtheta = (float(v) for v in u)
        return cls(dx, dy, dz, dtheta, Q)

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dz, self.dtheta])


@dataclass(frozen=True)
class DeadReckoningTrack:
    """Mean pose, its covariance and the number of increments applied so far."""

    mean: StateVector = ZERO_STATE
    cov: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))
    step_count: int = 0


def system_matrix(theta: float, dx: float, dy: float) -> np.ndarray:
    """Jacobian of one dead-reckoning step with respect to the previous pose."""
    c, s = math.cos(theta), math.sin(theta)
    F = np.eye(4)
    F[0, 3] = -s * dx - c * dy
    F[1, 3] = c * dx - s * dy
    return F


def propagate(track: DeadReckoningTrack, u: DeadReckoningIncrement) -> DeadReckoningTrack:
    theta = track.mean.theta
    R = rotation(theta)
    mean = StateVector.from_array(track.mean.as_array() + R @ u.as_array())
    F = system_matrix(theta, u.dx, u.dy)
    cov = symmetrize(F @ track.cov @ F.T + R @ u.Q @ R.T)
    return DeadReckoningTrack(mean, cov, track.step_count + 1)


def propagate_zero_frame(track0: DeadReckoningTrack, u: DeadReckoningIncrement) -> DeadReckoningTrack:
    """Same recursion as :func:`propagate`, applied to the track rooted at the zero pose."""
    return propagate(track0, u)


def integrate(increments, track: DeadReckoningTrack | None = None) -> DeadReckoningTrack:
    """Fold a sequence of increments into a track (fresh zero track by default)."""
    track = DeadReckoningTrack() if track is None else track
    for u in increments:
        track = propagate(track, u)
    return track
