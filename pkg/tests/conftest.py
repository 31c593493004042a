import numpy as np
import pytest

from rbinit.dead_reckoning import DeadReckoningTrack
from rbinit.initializer import InitializerState, ParticleSet, conditional_moments
from rbinit.likelihood import LikelihoodModel


def make_state(particles, zero_track=None):
    """Filter state holding exactly ``particles`` with weights normalized."""
    ps = ParticleSet.from_particles(particles)
    ps = ParticleSet(ps.p0, ps.theta0, ps.cos0, ps.sin0, ps.weights / ps.weights.sum())
    x0, P0, degenerate = conditional_moments(ps)
    return InitializerState(ps, zero_track or DeadReckoningTrack(), x0, P0, degenerate_heading=degenerate)


class TableLikelihood(LikelihoodModel):
    """Likelihood given by a function of the predicted range only."""

    scale = 1.0

    def __init__(self, fn):
        self.fn = fn

    def evaluate(self, observed, predicted):
        return self.fn(np.asarray(predicted, dtype=float))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = {}


def report(criterion, ok, detail):
    """Record one acceptance line; printed at the end of the run."""
    line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion}: {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
