"""Recursive Bayesian initialization of an agent's pose from ranging and dead reckoning."""

from rbinit.state import (
    StateVector,
    from_zero_frame,
    rotation,
    to_zero_frame,
    transform_covariance,
    wrap_angle,
    wrap_diff,
)
from rbinit.dead_reckoning import (
    DeadReckoningIncrement,
    DeadReckoningTrack,
    propagate,
    propagate_zero_frame,
    system_matrix,
)
from rbinit.likelihood import CauchyLikelihood, LikelihoodModel
from rbinit.initializer import (
    BaseHypotheses,
    InitializerConfig,
    InitializerState,
    Particle,
    RangeMeasurement,
    check_termination,
    conditional_moments,
    current_estimate,
    predicted_range,
    process_measurement,
    ranging_update,
    resample,
    seed,
)

__all__ = [
    "BaseHypotheses",
    "CauchyLikelihood",
    "DeadReckoningIncrement",
    "DeadReckoningTrack",
    "InitializerConfig",
    "InitializerState",
    "LikelihoodModel",
    "Particle",
    "RangeMeasurement",
    "StateVector",
    "check_termination",
    "conditional_moments",
    "current_estimate",
    "from_zero_frame",
    "predicted_range",
    "process_measurement",
    "propagate",
    "propagate_zero_frame",
    "ranging_update",
    "resample",
    "rotation",
    "seed",
    "system_matrix",
    "to_zero_frame",
    "transform_covariance",
    "wrap_angle",
    "wrap_diff",
]
