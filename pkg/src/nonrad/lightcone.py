"""Retarded/advanced light-cone conditions, Jacobians, influence intervals.

Subluminality makes every cone condition strictly monotone in the particle
time, so roots are unique and bracketed bisection plus Newton polishing is
guaranteed to converge.  Cone times landing within ``breakpoint_flag_tol``
of a segment boundary are flagged; downstream field code treats flagged
samples as undefined (a measure-zero set).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .config import DEFAULT_CONFIG
from .core import PiecewiseTrajectory, as_vec3, unit_direction
from .errors import (ConvergenceFailure, DegenerateInterval, NoBracket,
                     OutOfDomain)

__all__ = [
    "LightconeSolution", "InfluenceInterval",
    "solve_retarded", "solve_advanced", "solve_retarded_far",
    "lightcone_jacobian", "influence_interval", "far_observer_window",
]


@dataclass(frozen=True)
class LightconeSolution:
    """Kinematic state of a particle where its worldline crosses a cone.

    ``pos``, ``vel``, ``acc`` are one-sided from the causal side (below for
    retarded, above for advanced); ``jacobian`` is dt_cone/dt of the solved
    condition, positive for any subluminal trajectory.
    """

    t_cone: float
    pos: np.ndarray
    vel: np.ndarray
    acc: np.ndarray
    jacobian: float
    at_breakpoint: bool
    kind: str        # "retarded" | "advanced"
    residual: float


@dataclass(frozen=True)
class InfluenceInterval:
    """Partner times reachable from one worldline event (retarded to advanced)."""

    t_min: float
    t_max: float

    @property
    def width(self) -> float:
        return self.t_max - self.t_min


def _raise_for_status(status: int, what: str, traj: PiecewiseTrajectory):
    lo, hi = traj.domain
    if status == K.ROOT_BELOW:
        raise OutOfDomain(f"{what} lies before the trajectory domain [{lo}, {hi}]")
    if status == K.ROOT_ABOVE:
        raise OutOfDomain(f"{what} lies after the trajectory domain [{lo}, {hi}]")
    raise NoBracket(f"could not bracket {what} in [{lo}, {hi}]")


def _solution(traj, t_cone, kind, jacobian, residual, t_scale) -> LightconeSolution:
    bound = DEFAULT_CONFIG.cone_residual_scale * (1.0 + abs(t_scale))
    if residual > bound:
        raise ConvergenceFailure(
            f"{kind} cone residual {residual:.3e} exceeds {bound:.3e}")
    at_bp = traj.nearest_breakpoint_distance(t_cone) <= DEFAULT_CONFIG.breakpoint_flag_tol
    from_right = kind == "advanced"
    st = K.eval_state(K.handle_for(traj), t_cone, from_right)
    return LightconeSolution(
        t_cone=t_cone,
        pos=np.array(st[0:3]), vel=np.array(st[3:6]), acc=np.array(st[6:9]),
        jacobian=jacobian, at_breakpoint=at_bp, kind=kind, residual=residual)


def _solve_exact(traj, event_time, event_pos, advanced, bracket):
    p = as_vec3(event_pos, "event position")
    h = K.handle_for(traj)
    lo, hi = traj.domain
    status = K.BAD_BRACKET
    t_cone = 0.0
    if bracket is not None:
        blo, bhi = max(bracket[0], lo), min(bracket[1], hi)
        t_cone, status = K.cone_exact(h, event_time, p[0], p[1], p[2],
                                      advanced, blo, bhi)
    if status != K.OK:
        t_cone, status = K.cone_exact(h, event_time, p[0], p[1], p[2],
                                      advanced, lo, hi)
    if status != K.OK:
        kind = "advanced" if advanced else "retarded"
        _raise_for_status(status, f"{kind} time of event t={event_time}", traj)
    x = traj.position(t_cone)
    r = float(np.linalg.norm(x - p))
    sgn = 1.0 if advanced else -1.0
    residual = abs(t_cone - (event_time + sgn * r))
    from_right = bool(advanced)
    st = K.eval_state(h, t_cone, from_right)
    v = np.array(st[3:6])
    if r < 1e-14:
        jac = 1.0
    else:
        n_hat = (p - x) / r
        jac = 1.0 / (1.0 + sgn * float(n_hat @ v))
    kind = "advanced" if advanced else "retarded"
    return _solution(traj, t_cone, kind, jac, residual, event_time)


def solve_retarded(traj: PiecewiseTrajectory, event_time: float, event_pos,
                   bracket: tuple[float, float] | None = None) -> LightconeSolution:
    """Solve t_c = event_time - |x(t_c) - event_pos| (exact retarded cone)."""
    return _solve_exact(traj, float(event_time), event_pos, False, bracket)


def solve_advanced(traj: PiecewiseTrajectory, event_time: float, event_pos,
                   bracket: tuple[float, float] | None = None) -> LightconeSolution:
    """Solve t_c = event_time + |x(t_c) - event_pos| (exact advanced cone)."""
    return _solve_exact(traj, float(event_time), event_pos, True, bracket)


def solve_retarded_far(traj: PiecewiseTrajectory, t: float, n,
                       with_R: float | None = None,
                       bracket: tuple[float, float] | None = None,
                       _advanced: bool = False) -> LightconeSolution:
    """Far-zone retarded cone: t_c = (t - R) + n.x(t_c).

    With ``with_R`` absent, ``t`` is already the reduced observer time
    t - R, making the solution R-independent.
    """
    nv = unit_direction(n)
    t_obs = float(t) if with_R is None else float(t) - float(with_R)
    h = K.handle_for(traj)
    lo, hi = traj.domain
    status = K.BAD_BRACKET
    t_cone = 0.0
    if bracket is not None:
        blo, bhi = max(bracket[0], lo), min(bracket[1], hi)
        t_cone, status = K.cone_far(h, t_obs, nv[0], nv[1], nv[2],
                                    _advanced, blo, bhi)
    if status != K.OK:
        t_cone, status = K.cone_far(h, t_obs, nv[0], nv[1], nv[2],
                                    _advanced, lo, hi)
    if status != K.OK:
        kind = "advanced" if _advanced else "retarded"
        _raise_for_status(status, f"far-zone {kind} time of t={t}", traj)
    x = traj.position(t_cone)
    sgn = 1.0 if _advanced else -1.0
    residual = abs(t_cone - (t_obs - sgn * float(nv @ x)))
    st = K.eval_state(h, t_cone, bool(_advanced))
    v = np.array(st[3:6])
    jac = 1.0 / (1.0 + sgn * float(nv @ v))
    kind = "advanced" if _advanced else "retarded"
    return _solution(traj, t_cone, kind, jac, residual, t_obs)


def lightcone_jacobian(sol: LightconeSolution, n) -> float:
    """dt_cone/dt = 1/(1 - n.v) from the solution's one-sided velocity."""
    nv = unit_direction(n)
    return 1.0 / (1.0 - float(nv @ sol.vel))


def influence_interval(t2: float, x1_probe, traj2: PiecewiseTrajectory) -> InfluenceInterval:
    """Times of a probe point reachable from (t2, x2(t2)): (t2 - d, t2 + d)."""
    p = as_vec3(x1_probe, "probe position")
    x2 = traj2.position(t2)  # raises OutOfDomain when t2 outside
    d = float(np.linalg.norm(p - x2))
    if d <= 1e-15 * (1.0 + float(np.linalg.norm(p)) + float(np.linalg.norm(x2))):
        raise DegenerateInterval(
            f"probe coincides with x2(t2={t2}); influence interval has zero width")
    return InfluenceInterval(t2 - d, t2 + d)


def far_observer_window(*trajs: PiecewiseTrajectory,
                        margin: float = 0.0) -> tuple[float, float]:
    """Reduced observer times whose far cone times stay inside every domain.

    Since |n.x| <= max|x|, observer times in [t_start + max|x|, t_end - max|x|]
    keep the far-zone cone time of any direction inside the domain.
    """
    lo = -np.inf
    hi = np.inf
    for traj in trajs:
        r = traj.max_radius() + margin
        lo = max(lo, traj.t_start + r)
        hi = min(hi, traj.t_end - r)
    if not lo < hi:
        raise OutOfDomain("trajectory domains too short for far-zone sampling")
    return (float(lo), float(hi))
