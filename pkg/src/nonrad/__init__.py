"""nonrad: two-body electromagnetic orbits with velocity jumps.

Subpackages follow the pipeline: core (trajectories) -> lightcone (cone
solvers) -> fields (far fields and flux) -> nonradiating (orbit families
and certification), with ndde (delay-equation demos), variational (action,
gradients, momentum currents) and cli alongside.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .config import DEFAULT_CONFIG, RunConfig
from .core import (ParticleSpec, PiecewiseTrajectory, Segment, TwoBodySystem,
                   as_vec3, constant_trajectory, hermite_circle_trajectory,
                   piecewise_linear_trajectory,
                   trajectory_from_velocity_profile, unit_direction)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND", "RunConfig", "DEFAULT_CONFIG",
    "Segment", "PiecewiseTrajectory", "ParticleSpec", "TwoBodySystem",
    "as_vec3", "unit_direction",
    "constant_trajectory", "piecewise_linear_trajectory",
    "trajectory_from_velocity_profile", "hermite_circle_trajectory",
    "__version__",
]
