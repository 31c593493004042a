"""Two-agent ranging scenarios and their ground-truth trajectories."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from rbinit.state import wrap_angle, wrap_diff


@dataclass(frozen=True)
class Scenario:
    """Reference and joining-agent waypoints plus the ranging schedule.

    ``ranging_schedule`` pairs a reference waypoint index with an agent
    waypoint index; the range is taken when the agent reaches that waypoint.
    ``dr_noise`` is the per-step increment covariance in internal units
    (rad^2 for heading).
    """

    ref_waypoints: np.ndarray
    agent_waypoints: np.ndarray
    ranging_schedule: tuple
    step_length: float = 1.0
    range_noise_scale: float = 1.0
    dr_noise: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))

    def __post_init__(self):
        ref = np.asarray(self.ref_waypoints, dtype=float).reshape(-1, 3)
        agent = np.asarray(self.agent_waypoints, dtype=float).reshape(-1, 3)
        if len(ref) == 0 or len(agent) == 0:
            raise ValueError("waypoint lists must be non-empty")
        sched = tuple((int(r), int(a)) for r, a in self.ranging_schedule)
        for r, a in sched:
            if not (0 <= r < len(ref) and 0 <= a < len(agent)):
                raise ValueError(f"ranging event ({r}, {a}) outside trajectory bounds")
        if any(a2 < a1 for (_, a1), (_, a2) in zip(sched, sched[1:])):
            raise ValueError("ranging schedule must follow the agent's waypoint order")
        if not self.step_length > 0:
            raise ValueError("step_length must be positive")
        if not self.range_noise_scale >= 0:
            raise ValueError("range noise scale must be non-negative")
        dr = np.asarray(self.dr_noise, dtype=float)
        if dr.shape != (4, 4):
            raise ValueError("dr_noise must be 4x4")
        object.__setattr__(self, "ref_waypoints", ref)
        object.__setattr__(self, "agent_waypoints", agent)
        object.__setattr__(self, "ranging_schedule", sched)
        object.__setattr__(self, "dr_noise", dr)

    @property
    def n_rangings(self) -> int:
        return len(self.ranging_schedule)

    def without_dr_noise(self) -> Scenario:
        return replace(self, dr_noise=np.zeros((4, 4)))

    def agent_path_length(self) -> float:
        return float(np.linalg.norm(np.diff(self.agent_waypoints, axis=0), axis=1).sum())

    def ground_truth(self):
        """Interpolate the agent's waypoints into poses spaced at most ``step_length`` apart.

        Returns ``(poses, waypoint_pose_index)``: an ``(K+1, 4)`` array of
        ``[x, y, z, theta]`` where theta points along the next step, and the
        pose index at which each waypoint is reached.
        """
        pts = [self.agent_waypoints[0]]
        idx = [0]
        for a, b in zip(self.agent_waypoints[:-1], self.agent_waypoints[1:]):
            n = int(math.ceil(np.linalg.norm(b - a) / self.step_length - 1e-9))
            for s in range(1, n + 1):
                pts.append(a + (b - a) * (s / n))
            idx.append(len(pts) - 1)
        pos = np.array(pts)
        steps = np.diff(pos, axis=0)
        heading = np.zeros(len(pos))
        h = 0.0
        moving = [i for i, d in enumerate(steps) if np.hypot(d[0], d[1]) > 0]
        if moving:
            d = steps[moving[0]]
            h = math.atan2(d[1], d[0])
        for k in range(len(pos)):
            if k < len(steps) and np.hypot(steps[k, 0], steps[k, 1]) > 0:
                h = math.atan2(steps[k, 1], steps[k, 0])
            heading[k] = h
        return np.column_stack([pos, wrap_angle(heading)]), idx

    def true_increments(self, poses: np.ndarray | None = None) -> np.ndarray:
        """Agent-frame increments that reproduce ``poses`` exactly under noiseless dead reckoning."""
        if poses is None:
            poses, _ = self.ground_truth()
        prev, cur = poses[:-1], poses[1:]
        c, s = np.cos(prev[:, 3]), np.sin(prev[:, 3])
        d = cur[:, :3] - prev[:, :3]
        return np.column_stack([
            c * d[:, 0] + s * d[:, 1],
            -s * d[:, 0] + c * d[:, 1],
            d[:, 2],
            wrap_diff(cur[:, 3], prev[:, 3]),
        ])

    def to_dict(self) -> dict:
        diag = np.diag(self.dr_noise).copy()
        diag[3] = diag[3] * (180.0 / math.pi) ** 2
        return {
            "ref_waypoints": self.ref_waypoints.tolist(),
            "agent_waypoints": self.agent_waypoints.tolist(),
            "ranging_schedule": [list(p) for p in self.ranging_schedule],
            "step_length": self.step_length,
            "sigma": self.range_noise_scale,
            "dr_noise_diag": diag.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Scenario:
        """Build from the scenario-file schema; the heading entry of ``dr_noise_diag`` is deg^2."""
        for key in ("ref_waypoints", "agent_waypoints", "ranging_schedule", "sigma", "dr_noise_diag"):
            if key not in d:
                raise ValueError(f"scenario is missing field {key!r}")
        diag = np.asarray(d["dr_noise_diag"], dtype=float)
        if diag.shape != (4,) or np.any(diag < 0):
            raise ValueError("dr_noise_diag needs 4 non-negative variances")
        diag[3] = math.radians(math.sqrt(diag[3])) ** 2
        return cls(
            ref_waypoints=d["ref_waypoints"],
            agent_waypoints=d["agent_waypoints"],
            ranging_schedule=d["ranging_schedule"],
            step_length=float(d.get("step_length", 1.0)),
            range_noise_scale=float(d["sigma"]),
            dr_noise=np.diag(diag),
        )


def load_scenario(path) -> Scenario:
    path = Path(path)
    with path.open() as fh:
        return Scenario.from_dict(json.load(fh))


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2) + "\n")


def build_default_scenario() -> Scenario:
    """The two-agent walk: ~160 m for the joining agent, eight ranging events, sigma = 1 m."""
    text = resources.files("rbinit.data").joinpath("default_scenario.json").read_text()
    return Scenario.from_dict(json.loads(text))


def static_scenario(base: Scenario | None = None) -> Scenario:
    """The reference keeps walking while the joining agent stands at its first ranging spot."""
    base = build_default_scenario() if base is None else base
    first_agent = base.agent_waypoints[base.ranging_schedule[0][1]]
    n = base.n_rangings
    return replace(
        base,
        agent_waypoints=np.repeat(first_agent[None, :], n, axis=0),
        ranging_schedule=tuple((r, i) for i, (r, _) in enumerate(base.ranging_schedule)),
    )
