"""Policy search for linear-Gaussian control problems.

Core pieces: exact Lyapunov-based evaluation of the expected average
reward of a fixed-order output-feedback policy, gradient ascent with
random initialization over a parameter hypercube, robustification by
averaging the training reward over random multiplicative input
perturbations, and classical plus disk stability margins of the
resulting loops.
"""

from .errors import (
    ConfigError,
    DimensionMismatch,
    LqgrlError,
    MarginComputationError,
    NonStable,
    NoStabilizingSolution,
    NotRepresentable,
    RolloutOverflow,
    SingularResolvent,
    UnstableLoop,
    UnstableNominal,
)
from .margins import MarginReport, analyze, disk_margin, gain_margin_interval, loop_gain, phase_margin
from .policies import ClosedLoop, PolicyForm, PolicyParams, assemble, companion2, ctrb_canonical, realize
from .presets import Preset, doyle, flexible, get_preset
from .rewards import (
    McEstimate,
    PerturbationSpec,
    RewardEval,
    averaged_reward,
    exact_gradient,
    exact_reward,
    mc_reward,
)
from .solvers import (
    StabilityVerdict,
    freq_response,
    is_schur_stable,
    solve_dare,
    solve_dlyap,
    spectral_radius,
)
from .synthesis import LqgController, lqg_cost, lqg_gains, to_companion
from .systems import Controller, PlantModel, interconnect, loop_matrix
from .training import AscentRecord, Hypercube, StepPolicy, TrainConfig, TrainResult, ascend, train

__version__ = "0.1.0"

__all__ = [
    "AscentRecord",
    "ClosedLoop",
    "ConfigError",
    "Controller",
    "DimensionMismatch",
    "Hypercube",
    "LqgController",
    "LqgrlError",
    "MarginComputationError",
    "MarginReport",
    "McEstimate",
    "NonStable",
    "NoStabilizingSolution",
    "NotRepresentable",
    "PerturbationSpec",
    "PlantModel",
    "PolicyForm",
    "PolicyParams",
    "Preset",
    "RewardEval",
    "RolloutOverflow",
    "SingularResolvent",
    "StabilityVerdict",
    "StepPolicy",
    "TrainConfig",
    "TrainResult",
    "UnstableLoop",
    "UnstableNominal",
    "analyze",
    "ascend",
    "assemble",
    "averaged_reward",
    "companion2",
    "ctrb_canonical",
    "disk_margin",
    "doyle",
    "exact_gradient",
    "exact_reward",
    "flexible",
    "freq_response",
    "gain_margin_interval",
    "get_preset",
    "interconnect",
    "is_schur_stable",
    "loop_gain",
    "loop_matrix",
    "lqg_cost",
    "lqg_gains",
    "mc_reward",
    "phase_margin",
    "realize",
    "solve_dare",
    "solve_dlyap",
    "spectral_radius",
    "to_companion",
    "train",
]
