"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.  Tolerances are pinned here, not configurable.
"""

import time

import numpy as np
import pytest

from nonrad.core import (ParticleSpec, TwoBodySystem, constant_trajectory,
                         random_direction, trajectory_from_velocity_profile)
from nonrad.errors import BreakpointInStencil
from nonrad.fields import (e_ret_far, e_ret_far_via_curvature,
                           far_field_sample, flux, sphere_quadrature)
from nonrad.lightcone import solve_retarded, solve_retarded_far
from nonrad.ndde import DelayProblem, smoothing_profile, solve_steps
from nonrad.nonradiating import (SewingChainSpec, build_sewing_chain,
                                 check_gah, circular_orbit_system,
                                 extract_general_solution, rigidity_check)
from nonrad.variational import (BoundaryConfig, DiscretizedPath, QuadConfig,
                                action_report, action_s1,
                                admissible_right_velocity, extremize,
                                frechet_gradient, jump_mismatch)


class Budget:
    def __init__(self, name, seconds):
        self.name = name
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is None:
            status = "PASS" if elapsed < self.seconds else "PASS (over budget)"
            print(f"ACCEPTANCE {self.name}: {status} [{elapsed:.2f}s "
                  f"/ budget {self.seconds:.0f}s]")
            assert elapsed < self.seconds, \
                f"{self.name} exceeded runtime budget: {elapsed:.2f}s"
        else:
            print(f"ACCEPTANCE {self.name}: FAIL [{time.perf_counter()-self.start:.2f}s]")
        return False


def random_polygonal(rng, domain=(-200, 200)):
    k = int(rng.integers(1, 5))
    vels = rng.uniform(-0.6, 0.6, size=(k + 1, 3))
    jumps = np.sort(rng.uniform(-5, 5, size=k))
    if k > 1 and np.min(np.diff(jumps)) < 1e-3:
        jumps = np.linspace(-4, 4, k)
    return trajectory_from_velocity_profile(0.0, rng.uniform(-2, 2, 3),
                                            jumps, vels, domain)


def acceptance_chain():
    spec = SewingChainSpec((0.0,), ((0.15, 0, 0), (-0.15, 0, 0)), "both", 3)
    return build_sewing_chain(spec, [(0, 0, 1.0), (0, 0, -1.0)])


def test_criterion_1_lightcone_solver():
    with Budget("1 light-cone solver", 5.0):
        rng = np.random.default_rng(101)
        for _ in range(100):
            tr = random_polygonal(rng)
            t_ev = float(rng.uniform(-20, 20))
            p = rng.uniform(-10, 10, 3)
            sol = solve_retarded(tr, t_ev, p)
            x = tr.position(sol.t_cone)
            resid = abs(sol.t_cone - (t_ev - np.linalg.norm(x - p)))
            assert resid < 1e-12 * (1 + abs(t_ev))

            # Jacobian vs central finite differences on the far-zone map
            n = random_direction(rng)
            t_obs = float(rng.uniform(-10, 10))
            far = solve_retarded_far(tr, t_obs, n)
            if far.at_breakpoint:
                continue
            h = 1e-5
            fd = (solve_retarded_far(tr, t_obs + h, n).t_cone
                  - solve_retarded_far(tr, t_obs - h, n).t_cone) / (2 * h)
            assert abs(fd - far.jacobian) <= 1e-6 * abs(far.jacobian)


def test_criterion_2_field_form_equivalence():
    with Budget("2 field-form equivalence", 5.0):
        system = circular_orbit_system(1.0, 0.1, (-90, 90), 256)
        spec = system.particle1
        rng = np.random.default_rng(102)
        accepted = 0
        while accepted < 100:
            n = random_direction(rng)
            t = float(rng.uniform(-5, 5))
            closed = e_ret_far(spec, t, n)
            if not closed.defined:
                continue
            try:
                curv = e_ret_far_via_curvature(spec, t, n, h=1e-3)
            except BreakpointInStencil:
                continue
            rel = (np.linalg.norm(curv - closed.vector)
                   / np.linalg.norm(closed.vector))
            assert rel < 1e-6
            accepted += 1


def test_criterion_3_static_null():
    with Budget("3 static null case", 1.0):
        p1 = ParticleSpec(1.0, 1.0, constant_trajectory((1, 0, 0), (-60, 60)))
        p2 = ParticleSpec(-1.0, 1.0, constant_trajectory((-1, 0, 0), (-60, 60)))
        system = TwoBodySystem(p1, p2)
        rng = np.random.default_rng(103)
        for _ in range(20):
            s = far_field_sample(system, float(rng.uniform(-5, 5)),
                                 random_direction(rng))
            assert np.max(np.abs(s.e_ret)) < 1e-14
            assert np.max(np.abs(s.e_adv)) < 1e-14
            assert np.max(np.abs(s.poynting)) < 1e-14
        rep = flux(system, 0.0, sphere_quadrature(16, 32))
        assert abs(rep.total_flux) < 1e-14
        assert rep.max_field_sq < 1e-14


def test_criterion_4_gah_certification():
    with Budget("4 G.A.H. certification", 60.0):
        system = acceptance_chain()
        rep = check_gah(system, 40, 25, seed=104)
        assert rep.samples >= 1000
        assert rep.median < 1e-8
        assert rep.excluded_fraction < 0.05
        fr = flux(system, 0.9, sphere_quadrature(32, 64))
        bound = 1e-6 * (fr.max_field_sq + 1e-30)
        assert abs(fr.total_flux) < bound
        assert fr.excluded_fraction < 0.05


def test_criterion_5_gah_failure_circular():
    with Budget("5 G.A.H. failure (circular)", 60.0):
        sewing = acceptance_chain()
        circ = circular_orbit_system(1.0, 0.1, (-90, 90), 256)
        rep_s = check_gah(sewing, 40, 25, seed=105)
        rep_c = check_gah(circ, 40, 25, seed=105)
        assert rep_c.median > 1e3 * max(rep_s.median, 1e-30)
        assert rep_c.median > 1e-4  # manifestly nonvanishing pointwise
        fr = flux(circ, 0.0, sphere_quadrature(32, 64))
        assert fr.max_field_sq > 1e-6


def test_criterion_6_rigidity():
    with Budget("6 rigidity", 5.0):
        rng = np.random.default_rng(106)
        dirs = [random_direction(rng) for _ in range(16)]
        for _ in range(1000):
            v1 = rng.uniform(-0.6, 0.6, 3)
            v2 = rng.uniform(-0.6, 0.6, 3)
            if np.linalg.norm(v1 - v2) < 1e-9:
                continue
            verdict = rigidity_check(v1, v2, dirs)
            assert not verdict.forced_equal
            assert verdict.violating_direction is not None
        for _ in range(50):
            v = rng.uniform(-0.7, 0.7, 3)
            verdict = rigidity_check(v, v, dirs)
            assert verdict.forced_equal
            assert verdict.max_residual < 1e-12


def test_criterion_7_general_solution():
    with Budget("7 general solution", 30.0):
        spec = SewingChainSpec((0.0,), ((0.15, 0, 0), (-0.15, 0, 0)), "both", 1)
        system = build_sewing_chain(spec, [(0, 0, 1.0), (0, 0, -1.0)])
        for sigma in range(4):
            data = extract_general_solution(system, sigma, samples=12,
                                            directions=50, seed=107)
            assert data.per_interval_variance() < 1e-16
            assert data.direction_spread() < 1e-8


def test_criterion_8_ndde_dichotomy():
    with Budget("8 NDDE dichotomy", 1.0):
        retarded = DelayProblem("retarded", 0.0, 1.0, 1.0, (1.0,), 5.0)
        _, ledger_r = solve_steps(retarded)
        orders = smoothing_profile(ledger_r)
        assert orders == [0, 1, 2, 3, 4]
        assert all(b > a for a, b in zip(orders, orders[1:]))

        neutral = DelayProblem("neutral", -1.0, 0.0, 1.0, (-1.0, 1.0), 5.0)
        _, ledger_n = solve_steps(neutral)
        assert smoothing_profile(ledger_n) == [0, 0, 0, 0, 0]
        jumps = ledger_n.jump_in_derivative
        assert np.allclose(np.abs(jumps), 2.0, atol=1e-12)
        for k in range(len(jumps) - 1):
            assert abs(jumps[k + 1] - (-1.0) * jumps[k]) < 1e-12


def test_criterion_9_action_closed_form():
    with Budget("9 action closed form", 5.0):
        partner = ParticleSpec(-1.0, 1.0, constant_trajectory((-1, 0, 0),
                                                              (-30, 30)))
        bc = BoundaryConfig(0.0, 1.0, np.array([1.0, 0, 0]),
                            np.array([1.0, 0, 0]), partner)
        times = np.linspace(0, 1, 5)
        path = DiscretizedPath(times, np.tile([1.0, 0, 0], (5, 1)))
        value, err = action_report(path, bc)
        assert abs(value - (-1.5)) < 1e-10
        assert err < 1e-10

        # degree doubling on a smooth moving path
        t2 = np.linspace(0.0, 2.0, 9)
        pos = np.stack([1.0 + 0.1 * np.sin(t2), 0.2 * t2, 0 * t2], axis=1)
        bc2 = BoundaryConfig(0.0, 2.0, pos[0], pos[-1],
                             ParticleSpec(-1.0, 1.0,
                                          constant_trajectory((-2, 0, 0),
                                                              (-30, 30))))
        _, err2 = action_report(DiscretizedPath(t2, pos), bc2)
        assert err2 < 1e-10


def test_criterion_10_gradient_and_extremals():
    with Budget("10 gradient and extremal checks", 120.0):
        # (a) finite-difference gradient self-consistency within 1e-7
        times = np.linspace(0.0, 2.0, 6)
        pos = np.stack([1.5 + 0.1 * np.sin(times), 0.15 * times, 0 * times],
                       axis=1)
        partner = ParticleSpec(-1.0, 1.0, constant_trajectory((-2, 0, 0),
                                                              (-40, 40)))
        bc = BoundaryConfig(0.0, 2.0, pos[0], pos[-1], partner)
        path = DiscretizedPath(times, pos)
        g1 = frechet_gradient(path, bc, QuadConfig(gradient_step=1e-6)).gradient
        g2 = frechet_gradient(path, bc, QuadConfig(gradient_step=5e-7)).gradient
        scale = np.max(np.abs(g1))
        assert np.max(np.abs(g1 - g2)) / scale < 1e-7

        # (b) free-particle extremization recovers the straight line to 1e-8
        bcf = BoundaryConfig(0.0, 2.0, np.zeros(3), np.array([1.0, 0.4, 0]),
                             None, 1.0, 0.0)
        nodes = np.linspace(0, 2, 6)
        init = np.linspace([0, 0, 0], [1, 0.4, 0], 6)
        init[1:-1] += np.array([[0.05, -0.08, 0.1], [-0.04, 0.06, 0.02],
                                [0.03, 0.05, -0.07], [0.01, -0.02, 0.04]])
        out, rep = extremize(bcf, DiscretizedPath(nodes, init),
                             gradient_tol=1e-9)
        straight = np.linspace([0, 0, 0], [1, 0.4, 0], 6)
        assert np.max(np.abs(out.node_positions - straight)) < 1e-8

        # (c) engineered momentum-current jumps: |mismatch| < 1e-10
        tr1 = trajectory_from_velocity_profile(
            0.0, (1, 0, 0), [0.0], [(0.2, 0.1, 0), (0.3, -0.2, 0.1)], (-8, 8))
        partner_s = ParticleSpec(-1.0, 1.0, constant_trajectory((-1, 0, 0),
                                                                (-30, 30)))
        sys_s = TwoBodySystem(ParticleSpec(1.0, 1.0, tr1), partner_s)
        vr = admissible_right_velocity(sys_s, 0.0)
        tr1b = trajectory_from_velocity_profile(
            0.0, (1, 0, 0), [0.0], [(0.2, 0.1, 0), tuple(vr)], (-8, 8))
        sys_b = TwoBodySystem(ParticleSpec(1.0, 1.0, tr1b), partner_s)
        assert np.linalg.norm(jump_mismatch(sys_b, 0.0).mismatch) < 1e-10

        chain = build_sewing_chain(
            SewingChainSpec((0.0,), ((0.15, 0, 0), (-0.15, 0, 0)), "both", 1),
            [(0, 0, 1.0), (0, 0, -1.0)])
        vrc = admissible_right_velocity(chain, 0.0)
        trc = chain.particle1.trajectory
        jt = [float(b) for b in trc.breaks[1:-1]]
        vels = [trc.velocity(float(trc.breaks[0]) + 1e-9, "right")]
        for b in jt:
            vels.append(trc.velocity(b, "right"))
        vels[1] = vrc
        trc_b = trajectory_from_velocity_profile(0.0, trc.position(0.0), jt,
                                                 vels, trc.domain)
        sys_c = TwoBodySystem(
            ParticleSpec(chain.particle1.charge, chain.particle1.mass, trc_b),
            chain.particle2)
        assert np.linalg.norm(jump_mismatch(sys_c, 0.0).mismatch) < 1e-10

        # (d) interior EL residual decreases under mesh halving, order >= 1
        partner2 = ParticleSpec(-1.0, 1.0, constant_trajectory((0, 0, 0),
                                                               (-40, 40)))
        R0, ang, T = 2.0, 0.3, 2.0
        A = np.array([R0, 0, 0])
        B = np.array([R0 * np.cos(ang), R0 * np.sin(ang), 0.0])
        bca = BoundaryConfig(0.0, T, A, B, partner2)
        residual = {}
        for n in (7, 13):
            th = np.linspace(0, ang, n)
            posn = np.stack([R0 * np.cos(th), R0 * np.sin(th), np.zeros(n)],
                            axis=1)
            posn[0] = A
            posn[-1] = B
            p0 = DiscretizedPath(np.linspace(0, T, n), posn)
            _, repn = extremize(bca, p0, QuadConfig(richardson=False),
                                max_iterations=400)
            assert repn["converged"]
            residual[n] = float(np.max(repn["el_residual_samples"]))
        assert residual[13] < residual[7]
        order = np.log2(residual[7] / residual[13])
        assert order >= 1.0


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v", "-s"]))
