"""Simulation and bifurcation analysis of the rotor-actuated Twistcar."""
from .model import (DimlessParams, PhysicalParams, Pose, ReducedState, TABLE1,
                    nondimensionalize, redimensionalize)
from .integrator import IntegratorConfig, Trajectory, integrate
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "DimlessParams",
    "PhysicalParams",
    "Pose",
    "ReducedState",
    "TABLE1",
    "nondimensionalize",
    "redimensionalize",
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "BACKEND",
]
