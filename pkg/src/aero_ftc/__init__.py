"""Fault-tolerant LQR control of a 2DOF bi-rotor helicopter with augmented Kalman fault estimation."""

from .accommodation import AccommodationConfig, accommodate
from .estimator import AugmentedEstimate, FaultEstimator, NoiseConfig
from .lqr import LqrController, LqrWeights, design_lqr, lqr_gain, solve_care
from .model import (
    ContinuousModel,
    DiscreteModel,
    PhysicalParams,
    apply_fault,
    build_continuous_model,
    discretize_zoh,
    nominal_model,
)
from .sim import FaultEvent, ScenarioConfig, SimTrace, open_loop_release, run_scenario

__version__ = "0.1.0"
