"""Gyro-only H-infinity attitude control of multi-rotors on an exact LPV model."""

from .augmentation import (
    GeneralizedPlant,
    WeightConfig,
    build_generalized_plant,
    closed_loop,
    hover_nominal,
)
from .dynamics import (
    ActuatorModel,
    AttitudeState,
    InertiaParams,
    MomentInput,
    actuator_step,
    attitude_derivative,
    rk4_step,
)
from .environment import DrydenConfig, GyroNoiseConfig, disturbance_torques, gyro_noise
from .exceptions import (
    BisectionFailure,
    ConfigError,
    RegularityError,
    RotorHinfError,
    SingularityError,
)
from .lpv import RhoBox, RhoVector, extract_rho, frozen_lti, lpv_a_matrix, rho_grid
from .norms import hinf_norm
from .pid import CascadedPID, CascadedPidGains, pid_step, pid_tune
from .riccati import solve_care
from .simulation import SimConfig, SimResult, compute_metrics, run_closed_loop
from .statespace import StateSpaceModel, feedback, parallel, series
from .synthesis import HinfSynthesizer, SynthesisResult, hinfsyn, robust_stability_grid

__version__ = "0.1.0"

__all__ = [
    "ActuatorModel", "AttitudeState", "BisectionFailure", "CascadedPID", "CascadedPidGains",
    "ConfigError", "DrydenConfig", "GeneralizedPlant", "GyroNoiseConfig", "HinfSynthesizer",
    "InertiaParams", "MomentInput", "RegularityError", "RhoBox", "RhoVector",
    "RotorHinfError", "SimConfig", "SimResult", "SingularityError", "StateSpaceModel",
    "SynthesisResult", "WeightConfig", "actuator_step", "attitude_derivative",
    "build_generalized_plant", "closed_loop", "compute_metrics", "disturbance_torques",
    "extract_rho", "feedback", "frozen_lti", "gyro_noise", "hinf_norm", "hinfsyn",
    "hover_nominal", "lpv_a_matrix", "parallel", "pid_step", "pid_tune", "rho_grid",
    "rk4_step", "robust_stability_grid", "run_closed_loop", "series", "solve_care",
]
