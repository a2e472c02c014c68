"""Far electric/magnetic fields, Poynting vector, and sphere flux.

Fields are stored R-scaled (R*E) so nothing underflows at large sphere
radii; the flux integral multiplies by R^2 and divides by the stored
scaling squared, which cancels exactly, making every report R-independent.
Observer times are the reduced far-zone labels: the retarded field at
label t samples the retarded cone s - n.x(s) = t, and the advanced field
is the retarded field of the time-reversed trajectory at label -t (the
trajectory is time-reversed, the field vector maps across unchanged).

A sample is "defined" unless one of its cone times lands on a trajectory
breakpoint; flux excludes nodes whose cone times come within
``exclusion_radius`` of a breakpoint and reports the excluded fraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .config import DEFAULT_CONFIG
from .core import ParticleSpec, TwoBodySystem, unit_direction
from .errors import (BreakpointInStencil, OutOfDomain, TooManyExcluded,
                     TransversalityViolated)
from .lightcone import solve_retarded_far

__all__ = [
    "FarFieldTerm", "FarFieldSample", "SphereQuadrature", "FluxReport",
    "sphere_quadrature", "e_ret_far", "e_adv_far", "e_ret_far_via_curvature",
    "b_far", "poynting", "far_field_sample", "flux",
]

TRANSVERSALITY_TOL = 1e-10


@dataclass(frozen=True)
class FarFieldTerm:
    """One particle's R-scaled far field at a reduced observer label."""

    vector: np.ndarray
    defined: bool
    t_cone: float
    breakpoint_distance: float


@dataclass(frozen=True)
class FarFieldSample:
    """Total two-body far-field data at one (t, n) sphere sample."""

    e_ret: np.ndarray
    e_adv: np.ndarray
    b: np.ndarray
    poynting: np.ndarray
    defined: bool
    t: float
    n: np.ndarray


@dataclass(frozen=True)
class SphereQuadrature:
    """Product quadrature on the unit sphere (Gauss-Legendre x trapezoid)."""

    directions: np.ndarray  # (k, 3)
    weights: np.ndarray     # (k,)
    degree: int

    def __post_init__(self):
        total = float(np.sum(self.weights))
        if abs(total - 4.0 * np.pi) > 1e-10:
            raise ValueError(f"quadrature weights sum to {total}, not 4*pi")


def sphere_quadrature(n_theta: int | None = None,
                      n_phi: int | None = None) -> SphereQuadrature:
    """Gauss-Legendre in cos(theta) times uniform trapezoid in phi.

    Exact for spherical harmonics up to degree min(2*n_theta - 1, n_phi - 1).
    """
    n_theta = n_theta or DEFAULT_CONFIG.quad_n_theta
    n_phi = n_phi or DEFAULT_CONFIG.quad_n_phi
    x, w = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    sin_t = np.sqrt(1.0 - x * x)
    dirs = np.empty((n_theta * n_phi, 3))
    weights = np.empty(n_theta * n_phi)
    k = 0
    for i in range(n_theta):
        for j in range(n_phi):
            dirs[k] = (sin_t[i] * np.cos(phi[j]), sin_t[i] * np.sin(phi[j]), x[i])
            weights[k] = w[i] * (2.0 * np.pi / n_phi)
            k += 1
    return SphereQuadrature(dirs, weights, min(2 * n_theta - 1, n_phi - 1))


def _term_from_solution(traj, q, t_cone, n, vec) -> FarFieldTerm:
    dist = traj.nearest_breakpoint_distance(t_cone)
    return FarFieldTerm(vector=vec, defined=dist > DEFAULT_CONFIG.breakpoint_flag_tol,
                        t_cone=t_cone, breakpoint_distance=dist)


def e_ret_far(spec: ParticleSpec, t: float, n) -> FarFieldTerm:
    """R-scaled retarded far field q n x ((n - v)x a)/(1 - n.v)^3.

    Velocity and acceleration are one-sided from the causal (past) side;
    the sample is undefined when the cone time sits on a breakpoint.
    """
    nv = unit_direction(n)
    sol = solve_retarded_far(spec.trajectory, t, nv)
    v, a = sol.vel, sol.acc
    J = 1.0 / (1.0 - float(nv @ v))
    vec = spec.charge * np.cross(nv, np.cross(nv - v, a)) * J ** 3
    term = _term_from_solution(spec.trajectory, spec.charge, sol.t_cone, nv, vec)
    if sol.at_breakpoint:
        term = FarFieldTerm(vec, False, sol.t_cone, term.breakpoint_distance)
    return term


def e_adv_far(spec: ParticleSpec, t: float, n) -> FarFieldTerm:
    """Advanced counterpart, via the retarded field of the reversed path."""
    rev = spec.reversed()
    term = e_ret_far(rev, -float(t), n)
    # map the cone time back to the original trajectory's clock
    return FarFieldTerm(term.vector, term.defined, -term.t_cone,
                        term.breakpoint_distance)


def e_ret_far_via_curvature(spec: ParticleSpec, t: float, n,
                            h: float = 1e-4) -> np.ndarray:
    """Curvature form q n x (n x d^2/dt^2 x(t_cone(t))) by central differences.

    Agrees with ``e_ret_far`` to O(h^2) on smooth stretches; the stencil
    must not straddle a breakpoint in cone time.
    """
    nv = unit_direction(n)
    traj = spec.trajectory
    sols = [solve_retarded_far(traj, t + dt, nv) for dt in (-h, 0.0, h)]
    lo, hi = sols[0].t_cone, sols[2].t_cone
    inside = (traj.breaks > lo + 1e-15) & (traj.breaks < hi - 1e-15)
    if np.any(inside):
        raise BreakpointInStencil(
            f"breakpoint cone time inside stencil [{lo}, {hi}] at t={t}")
    w = (sols[2].pos - 2.0 * sols[1].pos + sols[0].pos) / (h * h)
    return spec.charge * np.cross(nv, np.cross(nv, w))


def _check_transverse(e, n, what):
    mag = float(np.linalg.norm(e))
    if mag > 0 and abs(float(n @ e)) > TRANSVERSALITY_TOL * mag:
        raise TransversalityViolated(
            f"{what} has longitudinal part {float(n @ e):.3e} (|E|={mag:.3e})")


def b_far(e_ret_total, e_adv_total, n) -> np.ndarray:
    """Far magnetic field (1/2) n x E_adv - (1/2) n x E_ret."""
    nv = unit_direction(n)
    return 0.5 * np.cross(nv, e_adv_total) - 0.5 * np.cross(nv, e_ret_total)


def poynting(e_ret_total, e_adv_total, n) -> np.ndarray:
    """Poynting vector (1/4)(|E_adv|^2 - |E_ret|^2) n.

    Inputs must be transverse; the result is cross-checked against the
    equivalent E x B form, which agrees identically for transverse fields.
    """
    nv = unit_direction(n)
    er = np.asarray(e_ret_total, dtype=float)
    ea = np.asarray(e_adv_total, dtype=float)
    _check_transverse(er, nv, "E_ret")
    _check_transverse(ea, nv, "E_adv")
    p = 0.25 * (float(ea @ ea) - float(er @ er)) * nv
    e_tot = 0.5 * ea + 0.5 * er
    p_cross = np.cross(e_tot, b_far(er, ea, nv))
    scale = max(float(ea @ ea), float(er @ er), 1e-300)
    if np.linalg.norm(p_cross - p) > 1e-10 * scale:
        raise TransversalityViolated(
            "Poynting forms disagree beyond tolerance; inputs not transverse")
    return p


def far_field_sample(system: TwoBodySystem, t: float, n,
                     exclusion_radius: float | None = None) -> FarFieldSample:
    """Total far fields of the pair at one reduced observer sample."""
    nv = unit_direction(n)
    excl = DEFAULT_CONFIG.exclusion_radius if exclusion_radius is None else exclusion_radius
    terms = []
    for spec in system.particles:
        terms.append(e_ret_far(spec, t, nv))
        terms.append(e_adv_far(spec, t, nv))
    defined = all(tm.defined and tm.breakpoint_distance > excl for tm in terms)
    er = terms[0].vector + terms[2].vector
    ea = terms[1].vector + terms[3].vector
    return FarFieldSample(
        e_ret=er, e_adv=ea, b=b_far(er, ea, nv),
        poynting=poynting(er, ea, nv), defined=defined, t=float(t), n=nv)


@dataclass(frozen=True)
class FluxReport:
    total_flux: float
    abs_flux: float
    max_field_sq: float
    excluded_fraction: float
    samples: int
    reliable: bool


def _batch_fields(spec: ParticleSpec, t_obs: np.ndarray, dirs: np.ndarray,
                  threads: int = 1, out_of_domain: str = "raise"):
    """(E, breakpoint distance) arrays for one particle's retarded fields.

    With ``threads`` > 1 the rows are split into contiguous chunks handled
    by a thread pool; per-row results are independent, so the output is
    bitwise identical for any thread count.  Samples whose cone time leaves
    the trajectory domain either raise OutOfDomain or, with
    ``out_of_domain="exclude"``, come back with zero field and zero
    breakpoint distance so the caller counts them as excluded.
    """
    traj = spec.trajectory
    h = K.handle_for(traj)
    lo, hi = traj.domain
    m = len(t_obs)
    if threads > 1 and m >= 2 * threads:
        from concurrent.futures import ThreadPoolExecutor
        bounds = np.linspace(0, m, threads + 1).astype(int)
        parts = [None] * threads

        def work(i):
            a, b = bounds[i], bounds[i + 1]
            parts[i] = K.retarded_far_fields(h, spec.charge, t_obs[a:b],
                                             dirs[a:b], lo, hi)

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(threads)))
        E = np.concatenate([p[0] for p in parts])
        tc = np.concatenate([p[1] for p in parts])
        status = np.concatenate([p[2] for p in parts])
    else:
        E, tc, status = K.retarded_far_fields(h, spec.charge, t_obs, dirs, lo, hi)
    bad = status != K.OK
    if np.any(bad):
        if out_of_domain == "raise":
            i = int(np.argmax(bad))
            raise OutOfDomain(
                f"far cone time left the domain at sample {i} "
                f"(t={t_obs[i]!r}); shrink the observer window")
        E[bad] = 0.0
    dist = np.min(np.abs(tc[:, None] - np.asarray(traj.breaks)[None, :]), axis=1)
    dist[bad] = 0.0
    return E, dist


def flux(system: TwoBodySystem, t: float, quad: SphereQuadrature | None = None,
         exclusion_radius: float | None = None, *,
         excluded_bound: float | None = None, strict: bool = True,
         R: float | None = None, return_nodes: bool = False,
         threads: int = 1):
    """Poynting flux through the far sphere at reduced observer label ``t``.

    Nodes whose cone times pass within ``exclusion_radius`` of a trajectory
    breakpoint are excluded and counted; the report is unreliable (or raises
    TooManyExcluded when ``strict``) if the excluded fraction exceeds the
    bound.  ``R`` only exercises the R^2/R^2 cancellation: results are
    R-independent by construction.
    """
    quad = quad or sphere_quadrature()
    excl = DEFAULT_CONFIG.exclusion_radius if exclusion_radius is None else exclusion_radius
    bound = (DEFAULT_CONFIG.excluded_fraction_bound
             if excluded_bound is None else excluded_bound)
    dirs = quad.directions
    m = len(dirs)
    t_ret = np.full(m, float(t))
    e_ret = np.zeros((m, 3))
    e_adv = np.zeros((m, 3))
    min_dist = np.full(m, np.inf)
    for spec in system.particles:
        E, dist = _batch_fields(spec, t_ret, dirs, threads,
                                out_of_domain="exclude")
        e_ret += E
        min_dist = np.minimum(min_dist, dist)
        Ea, dist_a = _batch_fields(spec.reversed(), -t_ret, dirs, threads,
                                   out_of_domain="exclude")
        e_adv += Ea
        min_dist = np.minimum(min_dist, dist_a)

    included = min_dist > excl
    excluded_fraction = 1.0 - float(np.count_nonzero(included)) / m

    er2 = np.einsum("ij,ij->i", e_ret, e_ret)
    ea2 = np.einsum("ij,ij->i", e_adv, e_adv)
    p_dot_n = 0.25 * (ea2 - er2)
    if R is not None:
        if not R > 0:
            raise ValueError("R must be positive")
        p_dot_n = (p_dot_n / (R * R)) * (R * R)

    w = quad.weights[included]
    total = float(np.dot(w, p_dot_n[included]))
    absf = float(np.dot(w, np.abs(p_dot_n[included])))
    max_sq = float(np.max(er2[included])) if np.any(included) else 0.0
    reliable = excluded_fraction < bound
    if strict and not reliable:
        raise TooManyExcluded(
            f"excluded fraction {excluded_fraction:.3f} exceeds bound {bound}")
    report = FluxReport(total, absf, max_sq, excluded_fraction, m, reliable)
    if return_nodes:
        nodes = {
            "t": np.full(m, float(t)), "n": dirs,
            "e_ret_mag": np.sqrt(er2), "e_adv_mag": np.sqrt(ea2),
            "p_dot_n": p_dot_n, "included": included,
        }
        return report, nodes
    return report
