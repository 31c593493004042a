"""Pose algebra: 4-DOF state vectors, planar rotations and zero-frame transforms.

A pose is ``[x, y, z, theta]`` with position in meters and the heading in the
horizontal plane in radians.  Headings are stored wrapped to ``(-pi, pi]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_diff(a, b):
    """Smallest signed angle ``a - b``, in ``(-pi, pi]``.

    Works elementwise on arrays.
    """
    d = np.mod(np.asarray(a, dtype=float) - b + math.pi, TWO_PI) - math.pi
    d = np.where(d <= -math.pi, d + TWO_PI, d)
    if d.ndim == 0:
        return float(d)
    return d


def wrap_angle(theta):
    """Wrap an angle (or array of angles) to ``(-pi, pi]``."""
    return wrap_diff(theta, 0.0)


@dataclass(frozen=True)
class StateVector:
    """Agent pose: 3-D position and planar heading."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        vals = (self.x, self.y, self.z, self.theta)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite state component in {vals}")
        for name, v in zip("xyz", vals[:3]):
            object.__setattr__(self, name, float(v))
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    @classmethod
    def from_array(cls, a: Iterable[float]) -> StateVector:
        x, y, z, theta = (float(v) for v in a)
        return cls(x, y, z, theta)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.theta])

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def __iter__(self):
        return iter((self.x, self.y, self.z, self.theta))


ZERO_STATE = StateVector()


def rotation(theta: float) -> np.ndarray:
    """4x4 rotation from the agent frame to the navigation frame.

    Rotates the horizontal position block; z and heading pass through.
    """
    c, s = math.cos(theta), math.sin(theta)
    return np.array(
        [
            [c, -s, 0.0, 0.0],
            [s, c, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def to_zero_frame(x: StateVector, x0: StateVector) -> StateVector:
    """Express ``x`` relative to the origin pose ``x0``: ``R(theta0)^T (x - x0)``."""
    d = x.as_array() - x0.as_array()
    return StateVector.from_array(rotation(x0.theta).T @ d)


def from_zero_frame(x0frame: StateVector, x0: StateVector) -> StateVector:
    """Inverse of :func:`to_zero_frame`: ``R(theta0) x0frame + x0``."""
    return StateVector.from_array(rotation(x0.theta) @ x0frame.as_array() + x0.as_array())


def symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def transform_covariance(P: np.ndarray, theta0: float) -> np.ndarray:
    """Rotate a pose covariance from the zero frame into the navigation frame."""
    R = rotation(theta0)
    return symmetrize(R @ np.asarray(P, dtype=float) @ R.T)


def check_covariance(P, name: str = "covariance") -> np.ndarray:
    """Validate a 4x4 pose covariance and return it symmetrized.

    Raises ``ValueError`` for wrong shape, non-finite entries, asymmetry beyond
    ``1e-12`` relative, or a minimum eigenvalue below ``-1e-10 * trace``.
    """
    P = np.asarray(P, dtype=float)
    if P.shape != (4, 4):
        raise ValueError(f"{name} must be 4x4, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise ValueError(f"{name} has non-finite entries")
    scale = max(np.max(np.abs(P)), 1.0)
    if np.max(np.abs(P - P.T)) > 1e-12 * scale:
        raise ValueError(f"{name} is not symmetric")
    P = symmetrize(P)
    tr = float(np.trace(P))
    if np.linalg.eigvalsh(P)[0] < -1e-10 * max(tr, 1e-300):
        raise ValueError(f"{name} is not positive semidefinite")
    return P
