"""Simulation and Monte-Carlo evaluation of the initializer."""

from rbinit.sim.scenario import (
    Scenario,
    build_default_scenario,
    load_scenario,
    static_scenario,
)
from rbinit.sim.synth import Synthesis, synthesize
from rbinit.sim.harness import (
    RealizationResult,
    SimSettings,
    rmse_sweep,
    run_realization,
)
from rbinit.sim.oracle import oracle_filter

__all__ = [
    "RealizationResult",
    "Scenario",
    "SimSettings",
    "Synthesis",
    "build_default_scenario",
    "load_scenario",
    "oracle_filter",
    "rmse_sweep",
    "run_realization",
    "static_scenario",
    "synthesize",
]
