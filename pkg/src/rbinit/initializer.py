"""Particle filter over the static initial pose of a joining agent.

Each particle is a hypothesis ``[p0, theta0]`` about where the agent started
and which way it faced.  The agent's dead reckoning is tracked in the zero
frame (initial pose at the origin with zero heading), so a hypothesis maps to
a current position through one planar rotation by ``theta0``.  Since
``theta0`` never changes between resamplings, its cosine and sine are cached
on the particle and the ranging update needs no trigonometry at all.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from rbinit.counting import Counted, OpCounter, unwrap
from rbinit.dead_reckoning import DeadReckoningTrack, system_matrix
from rbinit.likelihood import LikelihoodModel
from rbinit.state import (
    TWO_PI,
    ZERO_STATE,
    StateVector,
    from_zero_frame,
    rotation,
    symmetrize,
    wrap_angle,
)

log = logging.getLogger(__name__)

UNDERFLOW = 1e-300


class TerminatedError(RuntimeError):
    """Raised when a measurement is fed to an initializer that has already terminated."""


class ResamplingError(RuntimeError):
    """Raised when the conditional covariance cannot be factorized even with jitter."""


@dataclass(frozen=True)
class Particle:
    p0: np.ndarray
    theta0: float
    cos_theta0: float
    sin_theta0: float
    weight: float

    @classmethod
    def at(cls, p0, theta0: float, weight: float = 1.0) -> Particle:
        theta0 = wrap_angle(theta0)
        return cls(np.asarray(p0, dtype=float), theta0, math.cos(theta0), math.sin(theta0), weight)


@dataclass(frozen=True)
class RangeMeasurement:
    value: float
    ref_position: np.ndarray

    def __post_init__(self):
        ref = np.asarray(self.ref_position, dtype=float).reshape(3)
        if not np.all(np.isfinite(ref)):
            raise ValueError("reference position must be finite")
        if not math.isfinite(self.value):
            raise ValueError("range must be finite")
        object.__setattr__(self, "ref_position", ref)
        object.__setattr__(self, "value", float(self.value))


def _tiling_count(granularity: float, what: str) -> int:
    if not granularity > 0:
        raise ValueError(f"{what} granularity must be positive")
    n = int(round(TWO_PI / granularity))
    if n < 1 or abs(n * granularity - TWO_PI) > 1e-9:
        raise ValueError(
            f"{what} granularity {math.degrees(granularity):g} deg does not divide 360 deg"
        )
    return n


def _check_weights(w, n: int, what: str) -> np.ndarray:
    w = np.ones(n) if w is None else np.asarray(w, dtype=float)
    if w.shape != (n,):
        raise ValueError(f"{what} weights need {n} entries, got {w.shape}")
    if np.any(w < 0) or not np.any(w > 0) or not np.all(np.isfinite(w)):
        raise ValueError(f"{what} weights must be finite, non-negative, and not all zero")
    return w


@dataclass(frozen=True)
class BaseHypotheses:
    """Grids whose Cartesian product seeds the particle set.

    Heights are absolute initial heights (m); range offsets are added to the
    first measured range.  Bearings and headings uniformly tile a full turn.
    """

    heights: Sequence[float] = (-0.5, 0.0, 0.5)
    range_offsets: Sequence[float] = (-1.0, 0.0, 1.0)
    bearing_granularity: float = math.pi / 4
    heading_granularity: float = math.pi / 4
    height_weights: Optional[Sequence[float]] = None
    heading_weights: Optional[Sequence[float]] = None

    def __post_init__(self):
        if len(self.heights) == 0:
            raise ValueError("no height hypotheses")
        if len(self.range_offsets) == 0:
            raise ValueError("no range hypotheses")
        _check_weights(self.height_weights, len(self.heights), "height")
        _check_weights(self.heading_weights, self.n_headings, "heading")
        _ = self.n_bearings

    @classmethod
    def from_degrees(cls, bearing_deg: float, heading_deg: float | None = None, **kw) -> BaseHypotheses:
        heading_deg = bearing_deg if heading_deg is None else heading_deg
        return cls(bearing_granularity=math.radians(bearing_deg),
                   heading_granularity=math.radians(heading_deg), **kw)

    @property
    def n_bearings(self) -> int:
        return _tiling_count(self.bearing_granularity, "bearing")

    @property
    def n_headings(self) -> int:
        return _tiling_count(self.heading_granularity, "heading")

    @property
    def n_particles(self) -> int:
        return len(self.heights) * len(self.range_offsets) * self.n_bearings * self.n_headings

    def bearings(self) -> np.ndarray:
        return np.arange(self.n_bearings) * (TWO_PI / self.n_bearings)

    def headings(self) -> np.ndarray:
        return wrap_angle(np.arange(self.n_headings) * (TWO_PI / self.n_headings))


@dataclass(frozen=True)
class InitializerConfig:
    """Filter tuning.

    ``gamma_cov`` bounds the diagonal of the initial-pose covariance in
    ``(m^2, m^2, m^2, rad^2)``.  With ``latch_termination`` off the filter
    only records when the bounds are first met and keeps accepting ranges.
    """

    gamma: float = 0.1
    alpha: float = 1.2
    gamma_cov: tuple = (1.0, 1.0, 1.0, math.radians(10.0) ** 2)
    latch_termination: bool = True

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.alpha >= 1 or not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        gc = tuple(float(v) for v in self.gamma_cov)
        if len(gc) != 4 or not all(v > 0 for v in gc):
            raise ValueError(f"gamma_cov needs 4 positive bounds, got {self.gamma_cov}")
        object.__setattr__(self, "gamma_cov", gc)


@dataclass(frozen=True)
class ParticleSet:
    """Structure-of-arrays storage for ``N`` initial-pose hypotheses."""

    p0: np.ndarray  # (N, 3)
    theta0: np.ndarray  # (N,)
    cos0: np.ndarray
    sin0: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, i) -> Particle:
        return Particle(self.p0[i].copy(), float(self.theta0[i]), float(self.cos0[i]),
                        float(self.sin0[i]), float(self.weights[i]))

    @classmethod
    def from_particles(cls, particles: Sequence[Particle]) -> ParticleSet:
        return cls(
            np.array([p.p0 for p in particles], dtype=float).reshape(-1, 3),
            np.array([p.theta0 for p in particles], dtype=float),
            np.array([p.cos_theta0 for p in particles], dtype=float),
            np.array([p.sin_theta0 for p in particles], dtype=float),
            np.array([p.weight for p in particles], dtype=float),
        )


@dataclass(frozen=True)
class InitializerState:
    particles: ParticleSet
    zero_track: DeadReckoningTrack
    x0_hat: StateVector
    P0_hat: np.ndarray
    x_hat: StateVector = ZERO_STATE
    P_hat: np.ndarray = field(default_factory=lambda: np.zeros((4, 4)))
    ell: int = 0
    terminated: bool = False
    converged: bool = False
    first_converged: Optional[int] = None
    degenerate_heading: bool = False
    last_update_discarded: bool = False
    discarded_updates: int = 0
    resampled_total: int = 0
    counters: OpCounter = field(default_factory=OpCounter, compare=False)

    @property
    def n(self) -> int:
        return len(self.particles)


# kernels -----------------------------------------------------------------

def _range_kernel(ps: ParticleSet, zero_state: StateVector, ref, counter: OpCounter):
    c, s = Counted(ps.cos0, counter), Counted(ps.sin0, counter)
    px = Counted(ps.p0[:, 0], counter)
    py = Counted(ps.p0[:, 1], counter)
    pz = Counted(ps.p0[:, 2], counter)
    x0, y0 = zero_state.x, zero_state.y
    dz0 = zero_state.z - ref[2]
    dx = c * x0 - s * y0 + (px - ref[0])
    dy = s * x0 + c * y0 + (py - ref[1])
    dz = pz + dz0
    return np.sqrt(dx * dx + dy * dy + dz * dz)


def _moments_kernel(ps: ParticleSet, counter: OpCounter):
    w = Counted(ps.weights, counter)
    p = [Counted(ps.p0[:, k], counter) for k in range(3)]
    mean_p = [np.add.reduce(w * pk) for pk in p]
    S = np.add.reduce(w * Counted(ps.sin0, counter))
    C = np.add.reduce(w * Counted(ps.cos0, counter))
    degenerate = S == 0.0 and C == 0.0
    counter.tally("scalar_trig")
    mean_theta = 0.0 if degenerate else math.atan2(S, C)

    e = [mean_p[k] - p[k] for k in range(3)]
    e.append(np.remainder((mean_theta + math.pi) - Counted(ps.theta0, counter), TWO_PI) - math.pi)
    we = [w * ek for ek in e]
    P = np.empty((4, 4))
    for a in range(4):
        for b in range(a, 4):
            P[a, b] = P[b, a] = np.add.reduce(we[a] * e[b])
    return np.array(mean_p + [mean_theta]), P, degenerate


def conditional_moments(particles: ParticleSet, counter: OpCounter | None = None):
    """Weighted mean and wrapped-deviation covariance of the particle set.

    Returns ``(StateVector, P, degenerate)``; ``degenerate`` flags a heading
    vector sum of exactly zero length, in which case the mean heading is 0.
    """
    counter = OpCounter() if counter is None else counter
    mean, P, degenerate = _moments_kernel(particles, counter)
    return StateVector.from_array(mean), symmetrize(P), degenerate


def predicted_range(particle: Particle, zero_state: StateVector, ref_position) -> float:
    """Range from the reference to the agent's current position under ``particle``."""
    c, s = particle.cos_theta0, particle.sin_theta0
    p = particle.p0
    dx = c * zero_state.x - s * zero_state.y + p[0] - ref_position[0]
    dy = s * zero_state.x + c * zero_state.y + p[1] - ref_position[1]
    dz = zero_state.z + p[2] - ref_position[2]
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def _estimate(zero_track: DeadReckoningTrack, x0_hat: StateVector, P0_hat, counter: OpCounter):
    counter.tally("scalar_trig", 2)
    z = zero_track.mean
    x_hat = from_zero_frame(z, x0_hat)
    F = system_matrix(x0_hat.theta, z.x, z.y)
    R = rotation(x0_hat.theta)
    P_hat = symmetrize(F @ P0_hat @ F.T + R @ zero_track.cov @ R.T)
    return x_hat, P_hat


def current_estimate(state: InitializerState):
    """Current pose and covariance: the zero-frame track re-anchored at the initial-pose estimate."""
    return _estimate(state.zero_track, state.x0_hat, state.P0_hat, state.counters)


# filter steps ------------------------------------------------------------

def seed(
    first_range: RangeMeasurement,
    zero_track: DeadReckoningTrack,
    base: BaseHypotheses,
    likelihood: LikelihoodModel,
    initial_guess: StateVector = ZERO_STATE,
    counters: OpCounter | None = None,
) -> InitializerState:
    """Deterministically sample the first-range likelihood into initial-pose particles.

    ``initial_guess`` is the anchor used before any range is available; it is
    superseded by the seeded moments and kept only for the caller's records.
    """
    if first_range.value < 0:
        raise ValueError(f"first range must be non-negative, got {first_range.value}")
    counters = OpCounter() if counters is None else counters
    r0 = first_range.value
    ref = first_range.ref_position
    z = zero_track.mean

    heights = np.asarray(base.heights, dtype=float)
    w_h = _check_weights(base.height_weights, len(heights), "height")
    ranges = np.maximum(r0 + np.asarray(base.range_offsets, dtype=float), 0.0)
    w_r = np.asarray(likelihood.evaluate(ranges, r0), dtype=float)
    chi = base.bearings()
    theta = base.headings()
    w_t = _check_weights(base.heading_weights, len(theta), "heading")

    cos_chi, sin_chi = np.cos(chi), np.sin(chi)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    counters.tally("trig", 2 * (len(chi) + len(theta)))

    # axes: (height i, range j, bearing n, heading m)
    dz = (ref[2] - z.z - heights)[:, None]
    rbar = np.sqrt(np.abs(ranges[None, :] ** 2 - dz**2))[:, :, None, None]
    cur_x = ref[0] - rbar * cos_chi[None, None, :, None]
    cur_y = ref[1] - rbar * sin_chi[None, None, :, None]
    p0x = cur_x - (cos_t * z.x - sin_t * z.y)[None, None, None, :]
    p0y = cur_y - (sin_t * z.x + cos_t * z.y)[None, None, None, :]

    shape = (len(heights), len(ranges), len(chi), len(theta))
    p0 = np.stack(
        [
            np.broadcast_to(p0x, shape).ravel(),
            np.broadcast_to(p0y, shape).ravel(),
            np.broadcast_to(heights[:, None, None, None], shape).ravel(),
        ],
        axis=1,
    )
    w = (w_h[:, None, None, None] * w_r[None, :, None, None] * w_t[None, None, None, :]) * np.ones(shape)
    w = w.ravel()
    total = np.add.reduce(w)
    if not total > 0:
        raise ValueError("seeding weights vanish")
    ps = ParticleSet(
        p0=p0,
        theta0=np.broadcast_to(theta, shape).ravel().copy(),
        cos0=np.broadcast_to(cos_t, shape).ravel().copy(),
        sin0=np.broadcast_to(sin_t, shape).ravel().copy(),
        weights=w / total,
    )
    x0_hat, P0_hat, degenerate = conditional_moments(ps, counters)
    x_hat, P_hat = _estimate(zero_track, x0_hat, P0_hat, counters)
    return InitializerState(
        particles=ps,
        zero_track=zero_track,
        x0_hat=x0_hat,
        P0_hat=P0_hat,
        x_hat=x_hat,
        P_hat=P_hat,
        ell=0,
        degenerate_heading=degenerate,
        counters=counters,
    )


def with_track(state: InitializerState, zero_track: DeadReckoningTrack) -> InitializerState:
    """Swap in an advanced zero-frame track and refresh the current estimate."""
    x_hat, P_hat = _estimate(zero_track, state.x0_hat, state.P0_hat, state.counters)
    return replace(state, zero_track=zero_track, x_hat=x_hat, P_hat=P_hat)


def ranging_update(
    state: InitializerState, meas: RangeMeasurement, likelihood: LikelihoodModel
) -> InitializerState:
    """Reweight every hypothesis by the likelihood of ``meas`` and refresh the moments.

    If the reweighted mass underflows, the measurement is dropped, the prior
    weights are kept and ``last_update_discarded`` is set.
    """
    if state.terminated:
        raise TerminatedError("initializer has terminated; hand off to a covariance filter")
    ps = state.particles
    counter = state.counters
    r_hat = _range_kernel(ps, state.zero_track.mean, meas.ref_position, counter)
    w = likelihood.reweight(Counted(ps.weights, counter), meas.value, r_hat)
    total = np.add.reduce(w)
    ell = state.ell + 1
    if not (math.isfinite(total) and total * likelihood.scale >= UNDERFLOW):
        log.warning("range %.3f at ell=%d discarded: likelihood mass underflow", meas.value, ell)
        return replace(state, ell=ell, last_update_discarded=True,
                       discarded_updates=state.discarded_updates + 1)
    w = unwrap(w * (1.0 / total))
    ps = replace(ps, weights=w)
    x0_hat, P0_hat, degenerate = conditional_moments(ps, counter)
    x_hat, P_hat = _estimate(state.zero_track, x0_hat, P0_hat, counter)
    return replace(
        state,
        particles=ps,
        x0_hat=x0_hat,
        P0_hat=P0_hat,
        x_hat=x_hat,
        P_hat=P_hat,
        ell=ell,
        degenerate_heading=degenerate,
        last_update_discarded=False,
    )


def cholesky_factor(P: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a PSD matrix, retrying once with a trace-scaled jitter."""
    tr = float(np.trace(P))
    if tr == 0.0:
        return np.zeros_like(P)
    try:
        return np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(P + 1e-12 * tr * np.eye(len(P)))
    except np.linalg.LinAlgError as exc:
        raise ResamplingError(f"covariance not factorizable: eigenvalues {np.linalg.eigvalsh(P)}") from exc


def draw_from_moments(mean: StateVector, P: np.ndarray, alpha: float, n: int, rng,
                      counter: OpCounter | None = None):
    """Draw ``n`` poses ``mean + alpha * L @ noise`` with ``P = L L^T``.

    Returns ``(p0, theta0, cos0, sin0)``; headings come back wrapped with
    their trigonometric cache filled.
    """
    counter = OpCounter() if counter is None else counter
    L = cholesky_factor(P)
    noise = np.asarray(rng.standard_normal((n, 4)), dtype=float)
    # dense lower-triangular product: 10 mul, 6 add per draw, then scale and shift
    cols = [Counted(noise[:, k], counter) for k in range(4)]
    out = []
    m = mean.as_array()
    for r in range(4):
        acc = cols[0] * L[r, 0]
        for k in range(1, r + 1):
            acc = acc + cols[k] * L[r, k]
        out.append(unwrap(acc * alpha + m[r]))
    theta = wrap_angle(out[3])
    theta = np.atleast_1d(theta)
    tc = Counted(theta, counter)
    cos0, sin0 = unwrap(np.cos(tc)), unwrap(np.sin(tc))
    p0 = np.stack(out[:3], axis=1)
    return p0, theta, cos0, sin0


def resample(state: InitializerState, rng, config: InitializerConfig) -> InitializerState:
    """Redraw every particle lighter than ``gamma / N`` from the Gaussian fit of the set."""
    ps = state.particles
    N = len(ps)
    mask = ps.weights < config.gamma / N
    k = int(np.count_nonzero(mask))
    if k == 0:
        return state
    p0_new, th_new, c_new, s_new = draw_from_moments(
        state.x0_hat, state.P0_hat, config.alpha, k, rng, state.counters
    )
    p0 = ps.p0.copy()
    theta0 = ps.theta0.copy()
    cos0 = ps.cos0.copy()
    sin0 = ps.sin0.copy()
    w = ps.weights.copy()
    p0[mask] = p0_new
    theta0[mask] = th_new
    cos0[mask] = c_new
    sin0[mask] = s_new
    w[mask] = 1.0 / N
    w = w / np.add.reduce(w)
    return replace(
        state,
        particles=ParticleSet(p0, theta0, cos0, sin0, w),
        resampled_total=state.resampled_total + k,
    )


def check_termination(P0_hat: np.ndarray, gamma_cov) -> bool:
    return bool(np.all(np.diag(P0_hat) < np.asarray(gamma_cov, dtype=float)))


def process_measurement(
    state: InitializerState,
    meas: RangeMeasurement,
    likelihood: LikelihoodModel,
    config: InitializerConfig,
    rng,
) -> InitializerState:
    """One ranging event: reweight, refresh moments and estimate, resample, test termination."""
    state = ranging_update(state, meas, likelihood)
    state = resample(state, rng, config)
    ok = check_termination(state.P0_hat, config.gamma_cov)
    first = state.first_converged
    if ok and first is None:
        first = state.ell
    return replace(
        state,
        converged=ok,
        first_converged=first,
        terminated=ok and config.latch_termination,
    )


def snapshot(state: InitializerState) -> dict:
    """JSON-ready record of the filter after a ranging event.

    Only particles heavier than ``1/N`` are listed.
    """
    ps = state.particles
    keep = np.flatnonzero(ps.weights > 1.0 / len(ps))
    return {
        "ell": state.ell,
        "x0_hat": state.x0_hat.as_array().tolist(),
        "P0_diag": np.diag(state.P0_hat).tolist(),
        "P0": state.P0_hat.tolist(),
        "x_hat": state.x_hat.as_array().tolist(),
        "particles": [
            {
                "index": int(i),
                "p0": ps.p0[i].tolist(),
                "theta0": float(ps.theta0[i]),
                "weight": float(ps.weights[i]),
            }
            for i in keep
        ],
    }


class GaussianTable:
    """Standard normal draws served cyclically from a table generated once up front."""

    def __init__(self, size: int = 1 << 16, seed: int = 0):
        self.table = np.random.default_rng(seed).standard_normal(size)
        self.pos = 0

    def standard_normal(self, size):
        n = int(np.prod(size))
        idx = (self.pos + np.arange(n)) % len(self.table)
        self.pos = (self.pos + n) % len(self.table)
        return self.table[idx].reshape(size)
