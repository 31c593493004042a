"""Measurement synthesis: noisy dead-reckoning increments and Cauchy range errors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rbinit.dead_reckoning import DeadReckoningIncrement
from rbinit.initializer import RangeMeasurement, cholesky_factor
from rbinit.sim.scenario import Scenario


@dataclass(frozen=True)
class Synthesis:
    """One realization of sensor data along a scenario.

    ``increments[k-1]`` carries the agent from pose ``k-1`` to pose ``k``;
    ``ranges`` pairs each measurement with the pose index it was taken at.
    """

    increments: list
    ranges: list
    truth: np.ndarray
    true_ranges: np.ndarray

    def events(self):
        """Time-ordered ``(kind, t, payload)`` tuples; a range at pose k follows increment k."""
        out = []
        ri = 0
        for k in range(len(self.truth)):
            if k > 0:
                out.append(("dr", float(k), self.increments[k - 1]))
            while ri < len(self.ranges) and self.ranges[ri][0] == k:
                out.append(("range", float(k), self.ranges[ri][1]))
                ri += 1
        return out


def cauchy_noise(rng, scale: float, size) -> np.ndarray:
    """Inverse-CDF Cauchy draws centred at zero."""
    u = rng.random(size)
    return scale * np.tan(math.pi * (u - 0.5))


def synthesize(scenario: Scenario, seed) -> Synthesis:
    """Sample dead-reckoning and range measurements; deterministic for a given ``seed``.

    ``seed`` may be an int, a sequence of ints or a ``numpy.random.Generator``.
    Range draws below zero are floored at zero.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    poses, wp_index = scenario.ground_truth()
    u_true = scenario.true_increments(poses)
    Q = scenario.dr_noise
    if np.count_nonzero(Q - np.diag(np.diag(Q))) == 0:
        L = np.diag(np.sqrt(np.diag(Q)))
    else:
        L = cholesky_factor(Q)
    noise = rng.standard_normal(u_true.shape) @ L.T
    increments = [DeadReckoningIncrement(*(u + w), Q=Q) for u, w in zip(u_true, noise)]

    pose_idx = [wp_index[a] for _, a in scenario.ranging_schedule]
    refs = [scenario.ref_waypoints[r] for r, _ in scenario.ranging_schedule]
    true_r = np.array([np.linalg.norm(poses[k, :3] - p) for k, p in zip(pose_idx, refs)])
    r_noise = cauchy_noise(rng, scenario.range_noise_scale, len(true_r))
    measured = np.maximum(true_r + r_noise, 0.0)
    ranges = [(k, RangeMeasurement(r, p)) for k, r, p in zip(pose_idx, measured, refs)]
    return Synthesis(increments, ranges, poses, true_r)
