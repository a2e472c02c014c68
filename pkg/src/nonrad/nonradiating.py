"""Non-radiating orbit families and their certification.

The constructive family here is the sewing chain: piecewise-constant
velocity pairs where each velocity jump of one particle is matched by a
partner jump exactly on its light cone, propagated as a zig-zag chain of
null-separated events (each induced event continues away from its parent,
so the chain never retraces itself).  Jump deltas are copied along the
chain; partner starting velocities are centered so a symmetric spec yields
a time-reversible system.

Certification checks the generalized absorber requirement (total retarded
far field vanishing almost everywhere), fits the per-interval dipole
decomposition of the cone-position difference, and evaluates the
rigidity and general-solution algebra for piecewise-constant velocities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels as K
from .config import DEFAULT_CONFIG
from .core import (ParticleSpec, PiecewiseTrajectory, TwoBodySystem, as_vec3,
                   hermite_circle_trajectory, random_direction,
                   trajectory_from_velocity_profile, unit_direction)
from .errors import (CausalityLoop, ConvergenceFailure, DegenerateDirections,
                     FitDegenerate, InvariantViolation, Superluminal,
                     TooManyExcluded)
from .fields import _batch_fields
from .lightcone import (far_observer_window, solve_advanced, solve_retarded,
                        solve_retarded_far)

__all__ = [
    "SewingChainSpec", "GahReport", "DipoleDecomposition",
    "GeneralSolutionData", "RigidityVerdict", "DipoleFamily",
    "build_sewing_chain", "check_gah", "decompose_dipole", "k12",
    "rigidity_check", "consistency_residual", "extract_general_solution",
    "family_from_system", "circular_orbit_system",
]


# ---------------------------------------------------------------------------
# sewing chains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SewingChainSpec:
    """Recipe for a sewing-chain orbit.

    ``jump_velocities`` is particle 1's piecewise-constant profile (one more
    entry than ``base_jump_times``).  ``partner_rule`` selects where partner
    jumps land: 'forward' (advanced cone), 'backward' (retarded cone) or
    'both' (the full symmetric chain).  ``chain_depth`` is the number of
    light-cone propagation levels.
    """

    base_jump_times: tuple
    jump_velocities: tuple
    partner_rule: str = "both"
    chain_depth: int = 1

    def __post_init__(self):
        times = tuple(float(t) for t in self.base_jump_times)
        vels = tuple(tuple(float(c) for c in as_vec3(v, "jump velocity"))
                     for v in self.jump_velocities)
        object.__setattr__(self, "base_jump_times", times)
        object.__setattr__(self, "jump_velocities", vels)
        if len(vels) != len(times) + 1:
            raise InvariantViolation(
                f"need len(jump_velocities) == len(base_jump_times)+1, "
                f"got {len(vels)} and {len(times)}")
        if any(times[i + 1] - times[i] <= 0 for i in range(len(times) - 1)):
            raise InvariantViolation("base jump times must be strictly increasing")
        for v in vels:
            if np.linalg.norm(v) >= 1.0:
                raise Superluminal(f"base velocity {v} is not subluminal")
        if self.partner_rule not in ("forward", "backward", "both"):
            raise InvariantViolation(
                f"partner_rule must be forward|backward|both, got {self.partner_rule!r}")
        if self.chain_depth < 1:
            raise InvariantViolation("chain_depth must be >= 1")

    def to_dict(self) -> dict:
        return {
            "base_jump_times": list(self.base_jump_times),
            "jump_velocities": [list(v) for v in self.jump_velocities],
            "partner_rule": self.partner_rule,
            "chain_depth": self.chain_depth,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SewingChainSpec":
        return cls(tuple(data["base_jump_times"]),
                   tuple(tuple(v) for v in data["jump_velocities"]),
                   data.get("partner_rule", "both"),
                   int(data.get("chain_depth", 1)))


@dataclass
class _ChainEvent:
    particle: int      # 0 or 1
    time: float        # current estimate
    delta: np.ndarray  # velocity jump applied at this event
    direction: int     # +1 forward chain, -1 backward chain (0 for base)
    parent: int        # index of parent event, -1 for base


def _profile_offset(rule: str, deltas: list[np.ndarray]) -> np.ndarray:
    total = np.sum(deltas, axis=0) if deltas else np.zeros(3)
    if rule == "forward":
        return np.zeros(3)
    if rule == "backward":
        return -total
    return -0.5 * total


def _build_particle_traj(anchor_pos, base_times, base_vels, extra, rule, domain):
    """Trajectory from a base profile plus induced (time, delta) jumps."""
    deltas = [d for _, d in extra]
    offset = _profile_offset(rule, deltas)
    times = list(base_times) + [t for t, _ in extra]
    order = np.argsort(times)
    jump_times = []
    jump_deltas = []
    base_deltas = ([np.asarray(base_vels[i + 1]) - np.asarray(base_vels[i])
                    for i in range(len(base_times))]
                   + [d for _, d in extra])
    for idx in order:
        jump_times.append(times[idx])
        jump_deltas.append(base_deltas[idx])
    for i in range(len(jump_times) - 1):
        if jump_times[i + 1] - jump_times[i] <= 1e-12:
            raise CausalityLoop(
                f"chain revisits jump time {jump_times[i]!r} (spacing "
                f"{jump_times[i+1]-jump_times[i]:.2e})")
    v0 = np.asarray(base_vels[0], dtype=float) + offset
    velocities = [v0]
    for d in jump_deltas:
        velocities.append(velocities[-1] + d)
    for v in velocities:
        if np.linalg.norm(v) >= 1.0:
            raise Superluminal(
                f"chain matching forces speed {np.linalg.norm(v):.4f} >= 1")
    return trajectory_from_velocity_profile(0.0, anchor_pos, jump_times,
                                            velocities, domain)


def build_sewing_chain(spec: SewingChainSpec, initial_positions,
                       masses: tuple[float, float] = (1.0, 1.0),
                       charge: float = 1.0,
                       domain_pad: float | None = None) -> TwoBodySystem:
    """Construct the sewing-chain two-body system.

    Particle 1 carries the base profile (anchored at its initial position at
    t = 0); every jump event induces a partner jump exactly on the partner's
    light cone per the partner rule, iterated ``chain_depth`` levels, with
    the jump delta copied along the chain.  Cone times are made
    self-consistent against the final trajectories by fixed-point iteration.
    """
    x0 = [as_vec3(initial_positions[0], "initial_positions[0]"),
          as_vec3(initial_positions[1], "initial_positions[1]")]
    if np.linalg.norm(x0[0] - x0[1]) < 1e-12:
        raise InvariantViolation("initial positions must be distinct")
    base_times = list(spec.base_jump_times)
    base_vels = [np.asarray(v) for v in spec.jump_velocities]
    deltas = [base_vels[i + 1] - base_vels[i] for i in range(len(base_times))]

    # event table: base events plus placeholders filled level by level
    events: list[_ChainEvent] = [
        _ChainEvent(0, t, d, 0, -1) for t, d in zip(base_times, deltas)]
    directions = {"forward": (1,), "backward": (-1,), "both": (1, -1)}[spec.partner_rule]
    frontier = [(i, directions) for i in range(len(events))]
    for _level in range(spec.chain_depth):
        new_frontier = []
        for idx, dirs in frontier:
            ev = events[idx]
            for dirn in dirs:
                child = _ChainEvent(1 - ev.particle, np.nan, ev.delta.copy(),
                                    dirn, idx)
                events.append(child)
                new_frontier.append((len(events) - 1, (dirn,)))
        frontier = new_frontier

    # domain estimate: worst-case chain extent at unit signal speed
    d0 = float(np.linalg.norm(x0[0] - x0[1]))
    span = (max(base_times) - min(base_times)) if base_times else 0.0
    reach = span + (spec.chain_depth + 1) * (d0 + span + 1.0)
    pad = domain_pad if domain_pad is not None else 2.0 * d0 + span + 2.0
    t_mid = 0.5 * (max(base_times) + min(base_times)) if base_times else 0.0
    domain = (t_mid - reach - pad, t_mid + reach + pad)

    def rebuild():
        extra0 = [(e.time, e.delta) for e in events
                  if e.particle == 0 and e.parent >= 0]
        extra1 = [(e.time, e.delta) for e in events if e.particle == 1]
        t0 = _build_particle_traj(x0[0], base_times, base_vels, extra0,
                                  spec.partner_rule, domain)
        t1 = _build_particle_traj(x0[1], [], [np.zeros(3)], extra1,
                                  spec.partner_rule, domain)
        return t0, t1

    # initial guess: solve cones level by level against base-only trajectories
    for e in events:
        if e.parent >= 0:
            e.time = np.nan
    trajs = None
    for iteration in range(200):
        if trajs is None:
            extra1_seed = []
            t0 = _build_particle_traj(x0[0], base_times, base_vels, [],
                                      spec.partner_rule, domain)
            t1 = _build_particle_traj(x0[1], [], [np.zeros(3)], extra1_seed,
                                      spec.partner_rule, domain)
            trajs = (t0, t1)
        max_move = 0.0
        for i, e in enumerate(events):
            if e.parent < 0:
                continue
            parent = events[e.parent]
            src = trajs[parent.particle].position(parent.time)
            target = trajs[e.particle]
            if e.direction > 0:
                sol = solve_advanced(target, parent.time, src)
            else:
                sol = solve_retarded(target, parent.time, src)
            if np.isfinite(e.time):
                max_move = max(max_move, abs(sol.t_cone - e.time))
            else:
                max_move = np.inf
            e.time = sol.t_cone
        trajs = rebuild()
        # the cone solver quantizes roots near breakpoints at 1e-13*(1+|t|)
        # (its fine bisection width), so the fixed point can cycle within
        # that bin; accept once moves are at the quantization level
        t_abs = max((abs(e.time) for e in events if np.isfinite(e.time)),
                    default=0.0)
        if max_move < 3e-13 * (1.0 + t_abs):
            break
    else:
        raise ConvergenceFailure(
            "sewing-chain cone times did not converge in 200 iterations")

    p1 = ParticleSpec(abs(charge), masses[0], trajs[0])
    p2 = ParticleSpec(-abs(charge), masses[1], trajs[1])
    return TwoBodySystem(p1, p2)


def circular_orbit_system(separation: float = 1.0, speed: float = 0.1,
                          domain: tuple[float, float] = (-80.0, 80.0),
                          segments_per_period: int = 256,
                          masses: tuple[float, float] = (1.0, 1.0),
                          charge: float = 1.0) -> TwoBodySystem:
    """Two opposite charges on a common circle (diametrically opposite).

    The classic stationary reference case: its far fields do not vanish
    pointwise, so this family fails the vanishing-almost-everywhere check
    even though the net flux through the far sphere cancels.
    """
    r = 0.5 * separation
    omega = speed / r
    t1 = hermite_circle_trajectory((0, 0, 0), r, omega, 0.0, domain,
                                   segments_per_period)
    t2 = hermite_circle_trajectory((0, 0, 0), r, omega, np.pi, domain,
                                   segments_per_period)
    return TwoBodySystem(ParticleSpec(abs(charge), masses[0], t1),
                         ParticleSpec(-abs(charge), masses[1], t2))


# ---------------------------------------------------------------------------
# G.A.H. certification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GahReport:
    """Statistics of R|E1_ret + E2_ret| over sampled (t, n)."""

    median: float
    p95: float
    max: float
    excluded_fraction: float
    samples: int

    def to_dict(self) -> dict:
        return {"median": self.median, "p95": self.p95, "max": self.max,
                "excluded_fraction": self.excluded_fraction,
                "samples": self.samples}


def check_gah(system: TwoBodySystem, t_samples: int = 40, n_samples: int = 25,
              exclusion_radius: float | None = None, *,
              seed: int = 0, window: tuple[float, float] | None = None,
              excluded_bound: float | None = None,
              return_residuals: bool = False):
    """Median/p95/max of the total retarded far field over random samples.

    Sampling is restricted to observer times whose cone times stay inside
    both trajectory domains; samples whose cone times come within
    ``exclusion_radius`` of a breakpoint are excluded and counted.
    Time reversal maps this check onto the advanced sum, so only the
    retarded combination is sampled.
    """
    total = t_samples * n_samples
    if total < 100:
        raise ValueError(f"sampling budget must be >= 100, got {total}")
    excl = DEFAULT_CONFIG.exclusion_radius if exclusion_radius is None else exclusion_radius
    bound = (DEFAULT_CONFIG.excluded_fraction_bound
             if excluded_bound is None else excluded_bound)
    tr1 = system.particle1.trajectory
    tr2 = system.particle2.trajectory
    if window is None:
        window = far_observer_window(tr1, tr2, margin=1.0)
    rng = np.random.default_rng(seed)
    ts = rng.uniform(window[0], window[1], size=t_samples)
    ns = np.stack([random_direction(rng) for _ in range(n_samples)])
    t_grid = np.repeat(ts, n_samples)
    n_grid = np.tile(ns, (t_samples, 1))

    e_sum = np.zeros((total, 3))
    min_dist = np.full(total, np.inf)
    for spec in system.particles:
        E, dist = _batch_fields(spec, t_grid, n_grid)
        e_sum += E
        min_dist = np.minimum(min_dist, dist)
    residuals = np.linalg.norm(e_sum, axis=1)
    included = min_dist > excl
    excluded_fraction = 1.0 - float(np.count_nonzero(included)) / total
    if excluded_fraction >= bound:
        raise TooManyExcluded(
            f"excluded fraction {excluded_fraction:.3f} exceeds bound {bound}")
    r = residuals[included]
    report = GahReport(float(np.median(r)), float(np.quantile(r, 0.95)),
                       float(np.max(r)), excluded_fraction, total)
    if return_residuals:
        samples = {"t": t_grid, "n": n_grid, "residual": residuals,
                   "included": included}
        return report, samples
    return report


# ---------------------------------------------------------------------------
# dipole decomposition, rigidity, general solution
# ---------------------------------------------------------------------------

def _transverse(v: np.ndarray, n: np.ndarray) -> np.ndarray:
    return v - float(n @ v) * n


def observer_breakpoints(system: TwoBodySystem, n) -> np.ndarray:
    """Observer times where some cone time crosses a trajectory breakpoint.

    For direction n, a breakpoint tau of particle k is seen at the reduced
    observer time tau - n.x_k(tau); these times bound the piecewise
    intervals of the cone-position difference.
    """
    nv = unit_direction(n)
    ts = []
    for spec in system.particles:
        tr = spec.trajectory
        for tau in tr.breaks[1:-1]:
            ts.append(float(tau - nv @ tr.position(float(tau))))
    return np.array(sorted(ts))


@dataclass(frozen=True)
class DipoleDecomposition:
    """Per-interval fit x1(t1-) - x2(t2-) = D + n f(t) + (t - t_sigma) V."""

    n: np.ndarray
    t_sigma: float
    t_sigma_next: float
    D: np.ndarray           # transverse to n
    V: np.ndarray           # transverse to n (the parallel part is gauge)
    t_samples: np.ndarray
    f_samples: np.ndarray
    fit_residual: float
    condition_number: float


def decompose_dipole(system: TwoBodySystem, n, sigma: int,
                     t_samples: int = 24) -> DipoleDecomposition:
    """Least-squares dipole decomposition on observer interval ``sigma``.

    The transverse part of the cone-position difference is fit linearly in
    t; f is the longitudinal part, which equals the cone-time difference
    t1- - t2- (V is taken transverse, absorbing its parallel gauge into f).
    """
    if t_samples < 4:
        raise FitDegenerate(f"need at least 4 samples, got {t_samples}")
    nv = unit_direction(n)
    window = far_observer_window(system.particle1.trajectory,
                                 system.particle2.trajectory)
    bps = observer_breakpoints(system, nv)
    grid = np.concatenate([[window[0]], bps[(bps > window[0]) & (bps < window[1])],
                           [window[1]]])
    if not 0 <= sigma < len(grid) - 1:
        raise FitDegenerate(
            f"interval index {sigma} out of range (0..{len(grid)-2})")
    t_lo, t_hi = grid[sigma], grid[sigma + 1]
    eps = 1e-9 * (1 + abs(t_lo) + abs(t_hi))
    ts = np.linspace(t_lo + eps, t_hi - eps, t_samples)

    diffs = np.empty((t_samples, 3))
    cone_diffs = np.empty(t_samples)
    for i, t in enumerate(ts):
        s1 = solve_retarded_far(system.particle1.trajectory, t, nv)
        s2 = solve_retarded_far(system.particle2.trajectory, t, nv)
        diffs[i] = s1.pos - s2.pos
        cone_diffs[i] = s1.t_cone - s2.t_cone

    # orthonormal tangent basis
    e1 = _transverse(np.array([1.0, 0, 0]) if abs(nv[0]) < 0.9
                     else np.array([0, 1.0, 0]), nv)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(nv, e1)
    A = np.stack([np.ones(t_samples), ts - t_lo], axis=1)
    cond = float(np.linalg.cond(A))
    if cond > 1e12:
        raise FitDegenerate(f"fit matrix condition number {cond:.2e}")
    D = np.zeros(3)
    V = np.zeros(3)
    resid_sq = 0.0
    for e in (e1, e2):
        y = diffs @ e
        coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
        D += coef[0] * e
        V += coef[1] * e
        pred = A @ coef
        resid_sq += float(np.max(np.abs(y - pred))) ** 2
    f = diffs @ nv
    return DipoleDecomposition(nv, float(t_lo), float(t_hi), D, V, ts, f,
                               float(np.sqrt(resid_sq)), cond)


def k12(v1, v2, n) -> float:
    """1/(1 - n.v1) - 1/(1 - n.v2)."""
    nv = unit_direction(n)
    a1 = as_vec3(v1, "v1")
    a2 = as_vec3(v2, "v2")
    return 1.0 / (1.0 - float(nv @ a1)) - 1.0 / (1.0 - float(nv @ a2))


@dataclass(frozen=True)
class RigidityVerdict:
    forced_equal: bool
    max_residual: float
    violating_direction: np.ndarray | None


def rigidity_check(v1, v2, n_samples: Sequence) -> RigidityVerdict:
    """Test v1 J1 - v2 J2 = K12 n over a direction set.

    The relation can hold for every direction only with v1 = v2; otherwise
    some sampled direction exposes a nonzero residual, reported back.
    Requires at least three non-coplanar directions.
    """
    a1 = as_vec3(v1, "v1")
    a2 = as_vec3(v2, "v2")
    dirs = np.stack([unit_direction(n) for n in n_samples])
    if len(dirs) < 3 or np.linalg.matrix_rank(dirs, tol=1e-9) < 3:
        raise DegenerateDirections("need >= 3 non-coplanar directions")
    J1 = 1.0 / (1.0 - dirs @ a1)
    J2 = 1.0 / (1.0 - dirs @ a2)
    lhs = a1[None, :] * J1[:, None] - a2[None, :] * J2[:, None]
    resid = lhs - (J1 - J2)[:, None] * dirs
    norms = np.linalg.norm(resid, axis=1)
    worst = int(np.argmax(norms))
    max_res = float(norms[worst])
    if max_res < 1e-12:
        return RigidityVerdict(True, max_res, None)
    return RigidityVerdict(False, max_res, dirs[worst])


# ---------------------------------------------------------------------------
# the general-solution family and its consistency check
# ---------------------------------------------------------------------------

@dataclass
class DipoleFamily:
    """Candidate x1(t1-, n) built from partner data and dipole functions.

    Parametrized by the observer pair (t, n): the partner cone time comes
    from the cone condition on trajectory 2, and

        x1_candidate(t, n) = x2(t2-) + D(n) + f(t, n) n + (t - t_sigma) V(t, n)
        label(t, n)        = t2-(t, n) + f(t, n)

    A family describes a single physical trajectory exactly when
    x1_candidate at fixed label does not move as n rotates.
    """

    traj2: PiecewiseTrajectory
    D_fn: Callable
    V_fn: Callable
    f_fn: Callable
    t_sigma_fn: Callable
    window: tuple[float, float]

    def t2m(self, t_obs: float, n: np.ndarray) -> float:
        return solve_retarded_far(self.traj2, t_obs, n).t_cone

    def x1_candidate(self, t_obs: float, n: np.ndarray) -> np.ndarray:
        t2 = self.t2m(t_obs, n)
        x2 = self.traj2.position(t2)
        ts = self.t_sigma_fn(t_obs, n)
        V = self.V_fn(t_obs, n)
        V_perp = _transverse(V, n)
        return (x2 + self.D_fn(t_obs, n) + self.f_fn(t_obs, n) * n
                + (t_obs - ts) * V_perp)

    def label(self, t_obs: float, n: np.ndarray) -> float:
        return self.t2m(t_obs, n) + self.f_fn(t_obs, n)

    def invert_label(self, t1m: float, n: np.ndarray) -> float:
        """Observer time whose label equals t1m (monotone bisection)."""
        lo, hi = self.window
        flo = self.label(lo, n) - t1m
        fhi = self.label(hi, n) - t1m
        if not flo <= 0 <= fhi:
            raise ConvergenceFailure(
                f"label {t1m} not bracketed by window {self.window}")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi or hi - lo < 1e-15 * (1 + abs(mid)):
                break
            if self.label(mid, n) - t1m > 0:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)


def family_from_system(system: TwoBodySystem, *, zero_v: bool = False,
                       window: tuple[float, float] | None = None) -> DipoleFamily:
    """Dipole family built from an actual orbit's kinematics.

    With ``zero_v`` the linear-growth term is deliberately dropped,
    producing the inconsistent family whose candidate positions rotate
    with n at fixed label.
    """
    tr1 = system.particle1.trajectory
    tr2 = system.particle2.trajectory
    if window is None:
        window = far_observer_window(tr1, tr2, margin=0.5)

    def kinematics(t_obs, n):
        s1 = solve_retarded_far(tr1, t_obs, n)
        s2 = solve_retarded_far(tr2, t_obs, n)
        return s1, s2

    def interval(t_obs, n):
        bps = observer_breakpoints(system, n)
        grid = np.concatenate([[window[0]],
                               bps[(bps > window[0]) & (bps < window[1])],
                               [window[1]]])
        i = int(np.searchsorted(grid, t_obs, side="right")) - 1
        i = min(max(i, 0), len(grid) - 2)
        return float(grid[i]), float(grid[i + 1])

    def t_sigma(t_obs, n):
        return interval(t_obs, n)[0]

    # D and V are per-interval data: freeze them at the interval midpoint,
    # otherwise the family is trivially consistent for any V
    def V_fn(t_obs, n):
        if zero_v:
            return np.zeros(3)
        lo, hi = interval(t_obs, n)
        s1, s2 = kinematics(0.5 * (lo + hi), n)
        return _transverse(s1.vel * s1.jacobian - s2.vel * s2.jacobian, n)

    def f_fn(t_obs, n):
        s1, s2 = kinematics(t_obs, n)
        return s1.t_cone - s2.t_cone

    def D_fn(t_obs, n):
        lo, hi = interval(t_obs, n)
        t_ref = 0.5 * (lo + hi)
        s1, s2 = kinematics(t_ref, n)
        diff = _transverse(s1.pos - s2.pos, n)
        V_perp = _transverse(V_fn(t_obs, n), n)
        return diff - (t_ref - lo) * V_perp

    return DipoleFamily(tr2, D_fn, V_fn, f_fn, t_sigma, window)


def consistency_residual(candidate: DipoleFamily, t1: float, n,
                         h: float = 1e-5) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference estimate of dx1/dn at fixed label t1.

    Returns the two tangential derivative vectors; both vanish for a
    consistent (single-worldline) family.
    """
    nv = unit_direction(n)
    e1 = _transverse(np.array([1.0, 0, 0]) if abs(nv[0]) < 0.9
                     else np.array([0, 1.0, 0]), nv)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(nv, e1)
    out = []
    for e in (e1, e2):
        xs = []
        for sgn in (1.0, -1.0):
            np_dir = nv + sgn * h * e
            np_dir = np_dir / np.linalg.norm(np_dir)
            t_obs = candidate.invert_label(t1, np_dir)
            xs.append(candidate.x1_candidate(t_obs, np_dir))
        out.append((xs[0] - xs[1]) / (2.0 * h))
    return out[0], out[1]


@dataclass(frozen=True)
class GeneralSolutionData:
    """Tabulated general-solution functions on one trajectory interval."""

    A_samples: np.ndarray   # (n_dirs, n_times, 3)
    B_samples: np.ndarray
    t1_samples: np.ndarray  # (n_dirs, n_times)
    directions: np.ndarray

    def per_interval_variance(self) -> float:
        """Largest variance of any component over time at fixed direction."""
        va = np.max(np.var(self.A_samples, axis=1))
        vb = np.max(np.var(self.B_samples, axis=1))
        return float(max(va, vb))

    def direction_spread(self) -> float:
        """Largest deviation of the direction-wise means from each other."""
        mean_a = np.mean(self.A_samples, axis=1)
        mean_b = np.mean(self.B_samples, axis=1)
        sa = np.max(np.abs(mean_a - np.mean(mean_a, axis=0)[None, :]))
        sb = np.max(np.abs(mean_b - np.mean(mean_b, axis=0)[None, :]))
        return float(max(sa, sb))


def extract_general_solution(system: TwoBodySystem, sigma: int,
                             samples: int = 12, directions: int = 16, *,
                             seed: int = 0,
                             fd_fallback_tol: float = 1e-7) -> GeneralSolutionData:
    """Evaluate the general-solution functions A and B on interval ``sigma``.

    A = (v2- - n) dt2-/dt1- + n - (dt/dt1-) n x (n x V) and the 1<->2
    mirror, with the cone-time derivatives composed from the per-particle
    Jacobians (dt2-/dt1- = J2/J1, dt/dt1- = 1/J1); near flagged cone times
    the analytic Jacobian is replaced by a central finite difference.
    ``sigma`` indexes the observer-time intervals between breakpoint cone
    images (the same grid the dipole decomposition uses), so that neither
    cone time crosses a breakpoint while sampling.
    """
    tr1 = system.particle1.trajectory
    tr2 = system.particle2.trajectory
    window = far_observer_window(tr1, tr2, margin=0.1)
    rng = np.random.default_rng(seed)
    dirs = np.stack([random_direction(rng) for _ in range(directions)])

    def observer_times(n):
        bps = observer_breakpoints(system, n)
        grid = np.concatenate([[window[0]],
                               bps[(bps > window[0]) & (bps < window[1])],
                               [window[1]]])
        if not 0 <= sigma < len(grid) - 1:
            raise FitDegenerate(
                f"interval index {sigma} out of range (0..{len(grid)-2})")
        lo, hi = grid[sigma], grid[sigma + 1]
        eps = 1e-6 * (hi - lo)
        return np.linspace(lo + eps, hi - eps, samples)

    A = np.empty((directions, samples, 3))
    B = np.empty((directions, samples, 3))
    T1 = np.empty((directions, samples))
    for di, n in enumerate(dirs):
        for si, t_obs in enumerate(observer_times(n)):
            t_obs = float(t_obs)
            s1 = solve_retarded_far(tr1, t_obs, n)
            s2 = solve_retarded_far(tr2, t_obs, n)
            J1, J2 = s1.jacobian, s2.jacobian
            if s1.at_breakpoint or s2.at_breakpoint:
                h = fd_fallback_tol
                a1 = solve_retarded_far(tr1, t_obs + h, n).t_cone
                b1 = solve_retarded_far(tr1, t_obs - h, n).t_cone
                a2 = solve_retarded_far(tr2, t_obs + h, n).t_cone
                b2 = solve_retarded_far(tr2, t_obs - h, n).t_cone
                J1 = (a1 - b1) / (2 * h)
                J2 = (a2 - b2) / (2 * h)
            V = _transverse(s1.vel * J1 - s2.vel * J2, n)
            nxnxV = float(n @ V) * n - V  # n x (n x V) for transverse V = -V
            A[di, si] = (s2.vel - n) * (J2 / J1) + n - (1.0 / J1) * nxnxV
            B[di, si] = (s1.vel - n) * (J1 / J2) + n + (1.0 / J2) * nxnxV
            T1[di, si] = s1.t_cone
    return GeneralSolutionData(A, B, T1, dirs)
