"""Run-wide configuration defaults.

Units: c = 1 throughout; default charges are +1/-1 and default masses 1,
which is a toolkit choice (only c = 1 is intrinsic to the formulas).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields


@dataclass(frozen=True)
class RunConfig:
    # root finding
    bisect_width: float = 1e-9        # coarse bisection bracket width
    cone_residual_scale: float = 1e-12  # residual bound is scale*(1+|t|)
    breakpoint_flag_tol: float = 1e-12  # cone time flagged as at-breakpoint

    # far-field sampling / flux
    exclusion_radius: float = 1e-6    # time distance to breakpoint cones
    excluded_fraction_bound: float = 0.05
    quad_n_theta: int = 32
    quad_n_phi: int = 64

    # variational module
    gauss_points: int = 8
    min_separation: float = 1e-6
    gradient_step: float = 1e-6
    gradient_tol: float = 1e-7
    max_iterations: int = 200

    # defaults for system construction
    default_mass: float = 1.0
    default_charge: float = 1.0

    seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.type in (float, "float") and not v > 0:
                raise ValueError(f"config field {f.name} must be > 0, got {v}")
            if f.type in (int, "int") and f.name != "seed" and not v > 0:
                raise ValueError(f"config field {f.name} must be > 0, got {v}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)


DEFAULT_CONFIG = RunConfig()
