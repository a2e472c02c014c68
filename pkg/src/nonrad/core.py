"""Trajectories, vector helpers, and two-body system containers.

A trajectory is a contiguous list of polynomial segments (degree <= 3,
coefficients in the local parameter ``u = t - t_start``).  Position is
continuous across breakpoints; velocity and acceleration may jump, which
is the whole point of this toolkit.  Time intervals follow the half-open
convention ``(t_start, t_end]``: plain evaluation at a breakpoint returns
the limit from below, and one-sided accessors expose both limits.

All containers are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvariantViolation, OutOfDomain, SchemaError, Superluminal

__all__ = [
    "as_vec3", "unit_direction", "random_direction",
    "Segment", "PiecewiseTrajectory", "ParticleSpec", "TwoBodySystem",
    "position", "velocity_onesided", "acceleration_onesided",
    "constant_trajectory", "piecewise_linear_trajectory",
    "trajectory_from_velocity_profile", "hermite_circle_trajectory",
    "trajectory_to_dict", "trajectory_from_dict",
    "system_to_dict", "system_from_dict",
]

POSITION_TOL = 1e-12
DIRECTION_TOL = 1e-12


def as_vec3(v, what: str = "vector") -> np.ndarray:
    """Coerce to a finite float64 3-vector."""
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise InvariantViolation(f"{what} must have 3 components, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvariantViolation(f"{what} has non-finite components: {a}")
    return a


def unit_direction(v, what: str = "direction") -> np.ndarray:
    """Validate that ``v`` is a unit vector (|n| = 1 within 1e-12)."""
    n = as_vec3(v, what)
    if abs(np.linalg.norm(n) - 1.0) > DIRECTION_TOL:
        raise InvariantViolation(f"{what} is not unit length: |n|={np.linalg.norm(n)!r}")
    return n


def random_direction(rng: np.random.Generator) -> np.ndarray:
    """Uniform unit vector on the sphere."""
    while True:
        v = rng.normal(size=3)
        r = np.linalg.norm(v)
        if r > 1e-12:
            return v / r


def _poly_speed_sup(coeffs: np.ndarray, length: float) -> float:
    """Supremum of |velocity| over one segment.

    Velocity components are quadratics in u; |v|^2 has critical points at
    the real roots of the cubic 2 v.a, which we solve exactly and combine
    with endpoint and dense-grid samples.
    """
    c1, c2, c3 = coeffs[1], coeffs[2], coeffs[3]

    def speed(u):
        v = c1 + u * (2.0 * c2 + u * 3.0 * c3)
        return float(np.linalg.norm(v))

    candidates = [0.0, length]
    # v.a coefficients in u: (c1 + 2 c2 u + 3 c3 u^2).(2 c2 + 6 c3 u)
    k0 = 2.0 * float(c1 @ c2)
    k1 = 6.0 * float(c1 @ c3) + 4.0 * float(c2 @ c2)
    k2 = 18.0 * float(c2 @ c3)
    k3 = 18.0 * float(c3 @ c3)
    poly = [k3, k2, k1, k0]
    while poly and abs(poly[0]) < 1e-300:
        poly.pop(0)
    if len(poly) > 1:
        for r in np.roots(poly):
            if abs(r.imag) < 1e-9 and 0.0 <= r.real <= length:
                candidates.append(float(r.real))
    sup = max(speed(u) for u in candidates)
    grid = np.linspace(0.0, length, 33)
    sup = max(sup, max(speed(u) for u in grid))
    return sup


@dataclass(frozen=True)
class Segment:
    """One polynomial piece: position(t) = sum_j coeffs[j] * (t - t_start)^j."""

    t_start: float
    t_end: float
    coeffs: np.ndarray  # (4, 3), degrees 0..3

    def __post_init__(self):
        if not (np.isfinite(self.t_start) and np.isfinite(self.t_end)):
            raise InvariantViolation("segment endpoints must be finite")
        if not self.t_start < self.t_end:
            raise InvariantViolation(
                f"segment needs t_start < t_end, got [{self.t_start}, {self.t_end}]")
        c = np.zeros((4, 3))
        raw = np.asarray(self.coeffs, dtype=float)
        if raw.ndim != 2 or raw.shape[0] > 4 or raw.shape[1] != 3:
            raise InvariantViolation(
                f"segment coeffs must be (<=4, 3), got shape {raw.shape}")
        if not np.all(np.isfinite(raw)):
            raise InvariantViolation("segment coeffs must be finite")
        c[: raw.shape[0]] = raw
        object.__setattr__(self, "coeffs", c)
        c.setflags(write=False)
        sup = _poly_speed_sup(c, self.t_end - self.t_start)
        if sup >= 1.0:
            raise Superluminal(
                f"segment [{self.t_start}, {self.t_end}] reaches speed {sup:.6g} >= 1")

    @property
    def length(self) -> float:
        return self.t_end - self.t_start

    def position(self, t: float) -> np.ndarray:
        u = t - self.t_start
        c = self.coeffs
        return c[0] + u * (c[1] + u * (c[2] + u * c[3]))

    def velocity(self, t: float) -> np.ndarray:
        u = t - self.t_start
        c = self.coeffs
        return c[1] + u * (2.0 * c[2] + u * 3.0 * c[3])

    def acceleration(self, t: float) -> np.ndarray:
        u = t - self.t_start
        return 2.0 * self.coeffs[2] + u * 6.0 * self.coeffs[3]

    def reversed(self) -> "Segment":
        """Segment of the time-reversed trajectory covering [-t_end, -t_start]."""
        L = self.length
        c0, c1, c2, c3 = self.coeffs
        rev = np.empty((4, 3))
        rev[0] = c0 + L * (c1 + L * (c2 + L * c3))
        rev[1] = -(c1 + L * (2.0 * c2 + L * 3.0 * c3))
        rev[2] = c2 + 3.0 * L * c3
        rev[3] = -c3
        return Segment(-self.t_end, -self.t_start, rev)


class PiecewiseTrajectory:
    """Continuous, piecewise-polynomial, globally subluminal path."""

    __slots__ = ("segments", "breaks", "_coeff_array", "_max_radius",
                 "_kernel_handle")

    def __init__(self, segments: Sequence[Segment]):
        if not segments:
            raise InvariantViolation("trajectory needs at least one segment")
        segments = tuple(segments)
        for i in range(len(segments) - 1):
            a, b = segments[i], segments[i + 1]
            if abs(a.t_end - b.t_start) > POSITION_TOL:
                raise InvariantViolation(
                    f"segments {i} and {i+1} are not contiguous: "
                    f"{a.t_end} vs {b.t_start}")
            gap = np.linalg.norm(a.position(a.t_end) - b.position(b.t_start))
            if gap > POSITION_TOL:
                raise InvariantViolation(
                    f"position discontinuity {gap:.3e} at t={a.t_end}")
        self.segments = segments
        breaks = np.empty(len(segments) + 1)
        breaks[0] = segments[0].t_start
        for i, s in enumerate(segments):
            breaks[i + 1] = s.t_end
        breaks.setflags(write=False)
        self.breaks = breaks
        coeffs = np.ascontiguousarray(
            np.stack([s.coeffs for s in segments]))  # (m, 4, 3)
        coeffs.setflags(write=False)
        self._coeff_array = coeffs
        self._max_radius = None
        self._kernel_handle = None

    # -- domain ----------------------------------------------------------
    @property
    def t_start(self) -> float:
        return float(self.breaks[0])

    @property
    def t_end(self) -> float:
        return float(self.breaks[-1])

    @property
    def domain(self) -> tuple[float, float]:
        return (self.t_start, self.t_end)

    def breakpoints(self) -> np.ndarray:
        """Interior breakpoints (velocity may jump here)."""
        return self.breaks[1:-1]

    def contains(self, t: float) -> bool:
        return self.t_start <= t <= self.t_end

    def _check_domain(self, t: float):
        if not np.isfinite(t) or not self.contains(t):
            raise OutOfDomain(
                f"t={t!r} outside trajectory domain [{self.t_start}, {self.t_end}]")

    def segment_index(self, t: float, side: str = "left") -> int:
        """Index of the segment governing ``t``.

        side='left' follows the (a, b] convention (limit from below at
        breakpoints); side='right' gives the limit from above.
        """
        b = self.breaks
        if side == "left":
            i = bisect.bisect_left(b, t) - 1
        elif side == "right":
            i = bisect.bisect_right(b, t) - 1
        else:
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        return min(max(i, 0), len(self.segments) - 1)

    # -- evaluation --------------------------------------------------------
    def position(self, t: float) -> np.ndarray:
        self._check_domain(t)
        return self.segments[self.segment_index(t)].position(t)

    def velocity(self, t: float, side: str = "left") -> np.ndarray:
        self._check_domain(t)
        if side == "left" and t <= self.t_start:
            raise OutOfDomain(f"no left limit at domain start t={t!r}")
        if side == "right" and t >= self.t_end:
            raise OutOfDomain(f"no right limit at domain end t={t!r}")
        return self.segments[self.segment_index(t, side)].velocity(t)

    def acceleration(self, t: float, side: str = "left") -> np.ndarray:
        self._check_domain(t)
        if side == "left" and t <= self.t_start:
            raise OutOfDomain(f"no left limit at domain start t={t!r}")
        if side == "right" and t >= self.t_end:
            raise OutOfDomain(f"no right limit at domain end t={t!r}")
        return self.segments[self.segment_index(t, side)].acceleration(t)

    # -- derived -----------------------------------------------------------
    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(breaks, coeffs) arrays consumed by the kernel backends."""
        return self.breaks, self._coeff_array

    def reversed(self) -> "PiecewiseTrajectory":
        """The time-reversed trajectory t -> x(-t)."""
        return PiecewiseTrajectory([s.reversed() for s in reversed(self.segments)])

    def max_radius(self, samples_per_segment: int = 64) -> float:
        """Upper estimate of max |x(t)| over the domain (dense sampling)."""
        if self._max_radius is None:
            best = 0.0
            for s in self.segments:
                ts = np.linspace(s.t_start, s.t_end, samples_per_segment)
                u = ts - s.t_start
                c = s.coeffs
                pts = (c[0][None, :] + u[:, None] * (c[1][None, :]
                       + u[:, None] * (c[2][None, :] + u[:, None] * c[3][None, :])))
                best = max(best, float(np.max(np.linalg.norm(pts, axis=1))))
            self._max_radius = best
        return self._max_radius

    def nearest_breakpoint_distance(self, t: float) -> float:
        """Distance from ``t`` to the nearest segment boundary (incl. ends)."""
        return float(np.min(np.abs(self.breaks - t)))

    def __repr__(self) -> str:
        return (f"PiecewiseTrajectory({len(self.segments)} segments, "
                f"domain=[{self.t_start}, {self.t_end}])")


# -- spec-level operation aliases ------------------------------------------

def position(traj: PiecewiseTrajectory, t: float) -> np.ndarray:
    return traj.position(t)


def velocity_onesided(traj: PiecewiseTrajectory, t: float, side: str) -> np.ndarray:
    return traj.velocity(t, side)


def acceleration_onesided(traj: PiecewiseTrajectory, t: float, side: str) -> np.ndarray:
    return traj.acceleration(t, side)


# -- particles and systems ---------------------------------------------------

@dataclass(frozen=True)
class ParticleSpec:
    charge: float
    mass: float
    trajectory: PiecewiseTrajectory
    _reversed_cache: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if not np.isfinite(self.charge):
            raise InvariantViolation("charge must be finite")
        if not (np.isfinite(self.mass) and self.mass > 0):
            raise InvariantViolation(f"mass must be > 0, got {self.mass}")

    def reversed(self) -> "ParticleSpec":
        """Same particle on the time-reversed trajectory (cached)."""
        if not self._reversed_cache:
            self._reversed_cache.append(
                ParticleSpec(self.charge, self.mass, self.trajectory.reversed()))
        return self._reversed_cache[0]


@dataclass(frozen=True)
class TwoBodySystem:
    particle1: ParticleSpec
    particle2: ParticleSpec

    def __post_init__(self):
        q1, q2 = self.particle1.charge, self.particle2.charge
        if abs(q1 + q2) > 1e-12:
            raise InvariantViolation(f"charges must be opposite, got {q1} and {q2}")
        a = self.particle1.trajectory
        b = self.particle2.trajectory
        lo = max(a.t_start, b.t_start)
        hi = min(a.t_end, b.t_end)
        if not lo < hi:
            raise InvariantViolation("trajectory domains do not overlap")

    @property
    def particles(self) -> tuple[ParticleSpec, ParticleSpec]:
        return (self.particle1, self.particle2)

    def common_domain(self) -> tuple[float, float]:
        a = self.particle1.trajectory
        b = self.particle2.trajectory
        return (max(a.t_start, b.t_start), min(a.t_end, b.t_end))


# -- builders ---------------------------------------------------------------

def constant_trajectory(pos, domain: tuple[float, float]) -> PiecewiseTrajectory:
    p = as_vec3(pos, "position")
    return PiecewiseTrajectory([Segment(domain[0], domain[1], p[None, :])])


def piecewise_linear_trajectory(times: Sequence[float],
                                positions: Iterable) -> PiecewiseTrajectory:
    """Polygonal path through (times[i], positions[i])."""
    pts = [as_vec3(p, f"positions[{i}]") for i, p in enumerate(positions)]
    if len(times) != len(pts) or len(times) < 2:
        raise InvariantViolation("need matching times/positions, at least two")
    segs = []
    for i in range(len(times) - 1):
        dt = times[i + 1] - times[i]
        if dt <= 0:
            raise InvariantViolation(f"times must be strictly increasing at index {i}")
        v = (pts[i + 1] - pts[i]) / dt
        segs.append(Segment(times[i], times[i + 1], np.stack([pts[i], v])))
    return PiecewiseTrajectory(segs)


def trajectory_from_velocity_profile(anchor_time: float, anchor_pos,
                                     jump_times: Sequence[float],
                                     velocities: Sequence,
                                     domain: tuple[float, float]) -> PiecewiseTrajectory:
    """Piecewise-constant-velocity path anchored at (anchor_time, anchor_pos).

    ``velocities`` has one more entry than ``jump_times``; velocity k applies
    on the interval ending at jump_times[k] (and past the last jump).
    """
    jt = [float(t) for t in jump_times]
    vs = [as_vec3(v, f"velocities[{i}]") for i, v in enumerate(velocities)]
    if len(vs) != len(jt) + 1:
        raise InvariantViolation(
            f"need len(velocities) == len(jump_times)+1, got {len(vs)} and {len(jt)}")
    if any(jt[i + 1] - jt[i] <= 0 for i in range(len(jt) - 1)):
        raise InvariantViolation("jump times must be strictly increasing")
    lo, hi = domain
    if jt and not (lo < jt[0] and jt[-1] < hi):
        raise InvariantViolation("domain must strictly contain all jump times")
    if not (lo <= anchor_time <= hi):
        raise InvariantViolation("anchor time must lie inside the domain")
    knots = [lo] + jt + [hi]
    # integrate the profile from the anchor to the first knot
    anchor = as_vec3(anchor_pos, "anchor position")
    k = bisect.bisect_left(knots, anchor_time)  # profile index at anchor side
    vel_at = lambda i: vs[min(max(i, 0), len(vs) - 1)]
    # position at each knot by walking outward from the anchor
    pos_at = [None] * len(knots)
    # walk left
    t, p = anchor_time, anchor.copy()
    for i in range(k - 1, -1, -1):
        p = p - vel_at(i) * (t - knots[i])
        pos_at[i] = p.copy()
        t = knots[i]
    # walk right
    t, p = anchor_time, anchor.copy()
    for i in range(k, len(knots)):
        p = p + vel_at(i - 1) * (knots[i] - t)
        pos_at[i] = p.copy()
        t = knots[i]
    segs = [Segment(knots[i], knots[i + 1], np.stack([pos_at[i], vs[i]]))
            for i in range(len(knots) - 1)]
    return PiecewiseTrajectory(segs)


def hermite_circle_trajectory(center, radius: float, omega: float, phase: float,
                              domain: tuple[float, float],
                              segments_per_period: int = 256) -> PiecewiseTrajectory:
    """Circular orbit in the z=0 plane as cubic-Hermite segments.

    One trajectory type (cubic segments) serves every module, so circles are
    represented by Hermite interpolation of position and velocity at knots;
    the position error is O((2 pi / segments_per_period)^4).
    """
    c = as_vec3(center, "center")
    if radius <= 0 or omega == 0:
        raise InvariantViolation("need radius > 0 and omega != 0")
    if abs(radius * omega) >= 1.0:
        raise Superluminal(f"orbital speed {abs(radius*omega):.6g} >= 1")
    period = 2.0 * np.pi / abs(omega)
    h = period / segments_per_period
    lo, hi = domain
    n_seg = int(np.ceil((hi - lo) / h - 1e-12))
    if n_seg < 1:
        raise InvariantViolation("empty domain")
    knots = np.linspace(lo, hi, n_seg + 1)

    def state(t):
        a = omega * t + phase
        pos = c + radius * np.array([np.cos(a), np.sin(a), 0.0])
        vel = radius * omega * np.array([-np.sin(a), np.cos(a), 0.0])
        return pos, vel

    segs = []
    for i in range(n_seg):
        t0, t1 = knots[i], knots[i + 1]
        L = t1 - t0
        p0, v0 = state(t0)
        p1, v1 = state(t1)
        c2 = (3.0 * (p1 - p0) / L - 2.0 * v0 - v1) / L
        c3 = (2.0 * (p0 - p1) / L + v0 + v1) / (L * L)
        segs.append(Segment(t0, t1, np.stack([p0, v0, c2, c3])))
    # snap knot positions exactly (Hermite already interpolates, but guard
    # against accumulated rounding in knot spacing)
    return PiecewiseTrajectory(segs)


# -- JSON -----------------------------------------------------------------

def trajectory_to_dict(traj: PiecewiseTrajectory) -> dict:
    return {
        "domain": [traj.t_start, traj.t_end],
        "segments": [
            {"t": [s.t_start, s.t_end], "coeffs": s.coeffs.tolist()}
            for s in traj.segments
        ],
    }


def _expect(cond: bool, path: str, msg: str):
    if not cond:
        raise SchemaError(path, msg)


def trajectory_from_dict(data: dict, path: str = "trajectory") -> PiecewiseTrajectory:
    """Parse and validate the trajectory JSON schema.

    Schema: {"domain": [t0, t1],
             "segments": [{"t": [a, b], "coeffs": [[c0x, c0y, c0z], ...]}]}
    with coefficients in the local parameter u = t - a, degree <= 3.
    Errors carry the JSON path of the offending field.
    """
    _expect(isinstance(data, dict), path, "expected an object")
    _expect("domain" in data, path, "missing field 'domain'")
    _expect("segments" in data, path, "missing field 'segments'")
    dom = data["domain"]
    _expect(isinstance(dom, (list, tuple)) and len(dom) == 2,
            f"{path}.domain", "expected [t0, t1]")
    raw_segs = data["segments"]
    _expect(isinstance(raw_segs, list) and raw_segs,
            f"{path}.segments", "expected a non-empty list")
    segs = []
    for i, rs in enumerate(raw_segs):
        spath = f"{path}.segments[{i}]"
        _expect(isinstance(rs, dict), spath, "expected an object")
        _expect("t" in rs, spath, "missing field 't'")
        _expect("coeffs" in rs, spath, "missing field 'coeffs'")
        tt = rs["t"]
        _expect(isinstance(tt, (list, tuple)) and len(tt) == 2,
                f"{spath}.t", "expected [t_start, t_end]")
        try:
            a, b = float(tt[0]), float(tt[1])
        except (TypeError, ValueError):
            raise SchemaError(f"{spath}.t", "endpoints must be numbers") from None
        cc = rs["coeffs"]
        _expect(isinstance(cc, list) and 1 <= len(cc) <= 4,
                f"{spath}.coeffs", "expected 1..4 coefficient rows")
        rows = []
        for j, row in enumerate(cc):
            _expect(isinstance(row, (list, tuple)) and len(row) == 3,
                    f"{spath}.coeffs[{j}]", "expected [x, y, z]")
            try:
                rows.append([float(x) for x in row])
            except (TypeError, ValueError):
                raise SchemaError(f"{spath}.coeffs[{j}]",
                                  "components must be numbers") from None
        try:
            segs.append(Segment(a, b, np.array(rows)))
        except (InvariantViolation, Superluminal) as exc:
            raise SchemaError(spath, str(exc)) from None
    try:
        traj = PiecewiseTrajectory(segs)
    except InvariantViolation as exc:
        raise SchemaError(f"{path}.segments", str(exc)) from None
    _expect(abs(traj.t_start - float(dom[0])) <= 1e-9
            and abs(traj.t_end - float(dom[1])) <= 1e-9,
            f"{path}.domain", "domain does not match segment extent")
    return traj


def system_to_dict(system: TwoBodySystem) -> dict:
    return {
        "version": 1,
        "particles": [
            {"charge": p.charge, "mass": p.mass,
             "trajectory": trajectory_to_dict(p.trajectory)}
            for p in system.particles
        ],
    }


def system_from_dict(data: dict, path: str = "system") -> TwoBodySystem:
    _expect(isinstance(data, dict), path, "expected an object")
    _expect("particles" in data, path, "missing field 'particles'")
    parts = data["particles"]
    _expect(isinstance(parts, list) and len(parts) == 2,
            f"{path}.particles", "expected exactly two particles")
    specs = []
    for i, rp in enumerate(parts):
        ppath = f"{path}.particles[{i}]"
        _expect(isinstance(rp, dict), ppath, "expected an object")
        for key in ("charge", "mass", "trajectory"):
            _expect(key in rp, ppath, f"missing field '{key}'")
        try:
            specs.append(ParticleSpec(
                float(rp["charge"]), float(rp["mass"]),
                trajectory_from_dict(rp["trajectory"], f"{ppath}.trajectory")))
        except InvariantViolation as exc:
            raise SchemaError(ppath, str(exc)) from None
    try:
        return TwoBodySystem(specs[0], specs[1])
    except InvariantViolation as exc:
        raise SchemaError(f"{path}.particles", str(exc)) from None


def load_system(fname: str) -> TwoBodySystem:
    with open(fname) as fh:
        return system_from_dict(json.load(fh), path=fname)
