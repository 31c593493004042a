"""Brute-force bootstrap particle filter over the current pose.

This is the direct approach: every particle is pushed through each
dead-reckoning step, which costs a cosine and a sine per particle per step.
It serves as an independent reference for the initial-pose filter when the
dead reckoning is exact, since both then target the same posterior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from rbinit.counting import OpCounter
from rbinit.dead_reckoning import DeadReckoningTrack, propagate_zero_frame
from rbinit.initializer import BaseHypotheses, seed as seed_filter
from rbinit.likelihood import CauchyLikelihood
from rbinit.sim.harness import ORACLE_STREAM, SYNTH_STREAM, stream
from rbinit.sim.scenario import Scenario
from rbinit.sim.synth import Synthesis, synthesize
from rbinit.state import wrap_angle, wrap_diff


@dataclass
class OracleResult:
    positions: np.ndarray
    errors: np.ndarray
    counters: dict = field(default_factory=dict)
    n_particles: int = 0


def base_for_count(n: int, heights=(-0.5, 0.0, 0.5), range_offsets=(-1.0, 0.0, 1.0)) -> BaseHypotheses:
    """Hypothesis grid whose bearing x heading product brings N closest to ``n``."""
    per = n / (len(heights) * len(range_offsets))
    m = max(int(math.floor(math.sqrt(per))), 1)
    best = min(((a, b) for a in (m, m + 1) for b in (m, m + 1)), key=lambda ab: abs(ab[0] * ab[1] - per))
    return BaseHypotheses(heights=tuple(heights), range_offsets=tuple(range_offsets),
                          bearing_granularity=2 * math.pi / best[0],
                          heading_granularity=2 * math.pi / best[1])


def systematic_resample(weights: np.ndarray, rng) -> np.ndarray:
    n = len(weights)
    positions = (rng.random() + np.arange(n)) / n
    cs = np.cumsum(weights)
    cs[-1] = 1.0
    return np.minimum(np.searchsorted(cs, positions, side="right"), n - 1)


def _regularize(X: np.ndarray, rng) -> np.ndarray:
    # Gaussian-kernel bandwidth for a 4-D state
    n, d = X.shape
    h = (4.0 / (n * (d + 2))) ** (1.0 / (d + 4))
    mean_t = math.atan2(np.mean(np.sin(X[:, 3])), np.mean(np.cos(X[:, 3])))
    dev = X - X.mean(axis=0)
    dev[:, 3] = wrap_diff(X[:, 3], mean_t)
    C = dev.T @ dev / n
    w, V = np.linalg.eigh(C)
    L = V * np.sqrt(np.clip(w, 0.0, None))
    Y = X + h * rng.standard_normal((n, d)) @ L.T
    Y[:, 3] = wrap_angle(Y[:, 3])
    return Y


def oracle_filter(scenario: Scenario, base: BaseHypotheses | int, seed,
                  synthesis: Synthesis | None = None, sigma: float | None = None) -> OracleResult:
    """Bootstrap filter estimates of the agent position at each ranging instant.

    ``base`` is a hypothesis grid or a target particle count.  Particles are
    seeded on the same grid as the initial-pose filter, mapped to the current
    pose, propagated step by step, reweighted by the Cauchy likelihood, and
    resampled systematically (with kernel regularization) when the effective
    sample size falls below ``N / 2``.
    """
    if not isinstance(base, BaseHypotheses):
        base = base_for_count(int(base))
    syn = synthesis if synthesis is not None else synthesize(scenario, stream(seed, SYNTH_STREAM))
    rng = stream(seed, ORACLE_STREAM)
    lik = CauchyLikelihood(sigma if sigma is not None else scenario.range_noise_scale)
    counters = OpCounter()
    Q = scenario.dr_noise
    Lq = np.diag(np.sqrt(np.clip(np.diag(Q), 0.0, None)))
    noisy = bool(np.any(Lq > 0))

    track = DeadReckoningTrack()
    X = w = None
    positions, errors = [], []
    for kind, t, payload in syn.events():
        if kind == "dr":
            if X is None:
                track = propagate_zero_frame(track, payload)
                continue
            u = payload.as_array()
            if noisy:
                u = u + rng.standard_normal((len(X), 4)) @ Lq.T
            else:
                u = np.broadcast_to(u, (len(X), 4))
            c, s = np.cos(X[:, 3]), np.sin(X[:, 3])
            counters.tally("trig", 2 * len(X))
            X = X.copy()
            X[:, 0] += c * u[:, 0] - s * u[:, 1]
            X[:, 1] += s * u[:, 0] + c * u[:, 1]
            X[:, 2] += u[:, 2]
            X[:, 3] = wrap_angle(X[:, 3] + u[:, 3])
            continue
        if X is None:
            st = seed_filter(payload, track, base, lik, counters=counters)
            ps, z = st.particles, track.mean
            X = np.column_stack([
                ps.p0[:, 0] + ps.cos0 * z.x - ps.sin0 * z.y,
                ps.p0[:, 1] + ps.sin0 * z.x + ps.cos0 * z.y,
                ps.p0[:, 2] + z.z,
                wrap_angle(ps.theta0 + z.theta),
            ])
            w = ps.weights.copy()
        else:
            r_hat = np.linalg.norm(X[:, :3] - payload.ref_position, axis=1)
            w = w * lik.evaluate(payload.value, r_hat)
            w = w / w.sum()
        est = w @ X[:, :3]
        positions.append(est)
        errors.append(float(np.linalg.norm(est - syn.truth[int(round(t)), :3])))
        if 1.0 / np.sum(w * w) < 0.5 * len(w):
            X = _regularize(X[systematic_resample(w, rng)], rng)
            w = np.full(len(X), 1.0 / len(X))
    return OracleResult(np.array(positions), np.array(errors), dict(counters), 0 if X is None else len(X))


COMPARE_HEADER = ["ranging_index", "rmse_init_m", "rmse_oracle_m", "difference_m",
                  "trig_init", "trig_oracle", "trig_ratio"]


def oracle_compare(scenario: Scenario, settings, n_seeds: int = 50, n_particles: int = 10_000,
                   master_seed: int = 0):
    """Run both filters on identical data with exact dead reckoning.

    The initial-pose filter and the oracle share a hypothesis grid of about
    ``n_particles`` and every synthesized stream.  Returns one row per
    ranging index; the trig columns are totals over all seeds.
    """
    from rbinit.sim.harness import realization_seed, rmse, run_realization

    scenario = scenario.without_dr_noise()
    b = settings.base
    base = base_for_count(n_particles, b.heights, b.range_offsets)
    base = replace(base, height_weights=b.height_weights)
    settings = replace(settings, base=base, keep_snapshots=False)
    e_init, e_orc = [], []
    trig_init = trig_orc = 0
    for r in range(n_seeds):
        seed = realization_seed(master_seed, r)
        syn = synthesize(scenario, stream(seed, SYNTH_STREAM))
        res = run_realization(scenario, settings, seed, synthesis=syn)
        orc = oracle_filter(scenario, base, seed, synthesis=syn, sigma=settings.sigma)
        e_init.append(res.errors)
        e_orc.append(orc.errors)
        trig_init += res.counters.get("trig", 0)
        trig_orc += orc.counters.get("trig", 0)
    ri, ro = rmse(e_init), rmse(e_orc)
    ratio = trig_orc / trig_init if trig_init else math.inf
    return [
        {"ranging_index": i, "rmse_init_m": float(a), "rmse_oracle_m": float(o),
         "difference_m": float(a - o), "trig_init": trig_init, "trig_oracle": trig_orc,
         "trig_ratio": ratio}
        for i, (a, o) in enumerate(zip(ri, ro))
    ]
