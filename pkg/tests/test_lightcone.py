import numpy as np
import pytest

from nonrad.core import (constant_trajectory, piecewise_linear_trajectory,
                         trajectory_from_velocity_profile)
from nonrad.errors import DegenerateInterval, OutOfDomain
from nonrad.lightcone import (influence_interval, lightcone_jacobian,
                              solve_advanced, solve_retarded,
                              solve_retarded_far)


def bisect_oracle(f, lo, hi, iters=200):
    """Independent plain bisection on a monotone-increasing scalar function."""
    flo, fhi = f(lo), f(hi)
    assert flo <= 0 <= fhi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def test_retarded_static_origin():
    tr = constant_trajectory((0, 0, 0), (-100, 100))
    sol = solve_retarded(tr, 10.0, (5, 0, 0))
    assert abs(sol.t_cone - 5.0) < 1e-12
    assert sol.jacobian == pytest.approx(1.0)
    assert not sol.at_breakpoint


def test_retarded_static_offset():
    tr = constant_trajectory((1, 0, 0), (-100, 100))
    sol = solve_retarded(tr, 3.0, (1, 0, 4))
    assert abs(sol.t_cone - (-1.0)) < 1e-12


def test_retarded_uniform_motion_oracle():
    # Away-moving particle: the stated condition s = -|0.5 s - 10| has the
    # unique root s = -20 (bisection oracle agrees); the toward-moving
    # variant x(t) = (-0.5 t, 0, 0) is the one with root -20/3.
    tr = piecewise_linear_trajectory([-100, 100], [(-50, 0, 0), (50, 0, 0)])
    oracle = bisect_oracle(lambda s: s + abs(0.5 * s - 10.0), -100, 100)
    assert oracle == pytest.approx(-20.0, abs=1e-12)
    sol = solve_retarded(tr, 0.0, (10, 0, 0))
    assert abs(sol.t_cone - oracle) < 1e-11
    assert abs(sol.t_cone + 20.0) < 1e-11

    tr_in = piecewise_linear_trajectory([-100, 100], [(50, 0, 0), (-50, 0, 0)])
    oracle_in = bisect_oracle(lambda s: s + abs(-0.5 * s - 10.0), -100, 100)
    assert oracle_in == pytest.approx(-20.0 / 3.0, abs=1e-12)
    sol_in = solve_retarded(tr_in, 0.0, (10, 0, 0))
    assert abs(sol_in.t_cone + 20.0 / 3.0) < 1e-11


def test_advanced_static():
    tr = constant_trajectory((0, 0, 0), (-100, 100))
    sol = solve_advanced(tr, 10.0, (5, 0, 0))
    assert abs(sol.t_cone - 15.0) < 1e-12


def test_advanced_time_reversal_of_uniform():
    tr = piecewise_linear_trajectory([-100, 100], [(-50, 0, 0), (50, 0, 0)])
    ret = solve_retarded(tr, 0.0, (10, 0, 0))
    adv = solve_advanced(tr.reversed(), 0.0, (10, 0, 0))
    assert abs(adv.t_cone + ret.t_cone) < 1e-11


def test_advanced_zero_distance():
    tr = constant_trajectory((2, 1, 0), (-10, 10))
    sol = solve_advanced(tr, 3.0, (2, 1, 0))
    assert abs(sol.t_cone - 3.0) < 1e-12


def test_out_of_domain_root():
    tr = constant_trajectory((0, 0, 0), (0, 1))
    with pytest.raises(OutOfDomain):
        solve_retarded(tr, 50.0, (5, 0, 0))
    with pytest.raises(OutOfDomain):
        solve_advanced(tr, -50.0, (5, 0, 0))


def test_far_static_reduced_time():
    tr = constant_trajectory((0, 0, 0), (-100, 100))
    t, R = 4.0, 50.0
    sol = solve_retarded_far(tr, t, (1, 0, 0), with_R=R)
    assert abs(sol.t_cone - (t - R)) < 1e-12
    d = 2.5
    tr2 = constant_trajectory((d, 0, 0), (-100, 100))
    sol2 = solve_retarded_far(tr2, t, (1, 0, 0), with_R=R)
    assert abs(sol2.t_cone - (t - R + d)) < 1e-12
    # with_R absent: t is the reduced observer time
    sol3 = solve_retarded_far(tr2, t - R, (1, 0, 0))
    assert abs(sol3.t_cone - sol2.t_cone) < 1e-12


def test_far_converges_to_exact_with_R():
    # polygonal orbit: far-zone cone time approaches the exact one as O(1/R)
    tr = trajectory_from_velocity_profile(
        0.0, (0.3, 0.1, 0), [-1.0, 1.0], [(0.2, 0, 0), (0, -0.25, 0), (-0.2, 0.1, 0)],
        (-3000, 3000))
    n = np.array([0.6, 0.8, 0.0])
    t_red = 0.7
    errs = []
    radii = [1e2, 1e3, 1e4]
    for R in radii:
        exact = solve_retarded(tr, t_red + R, R * n)
        far = solve_retarded_far(tr, t_red + R, n, with_R=R)
        errs.append(abs(far.t_cone - exact.t_cone))
    # fitted decay order ~ 1 in 1/R
    order = np.polyfit(np.log(radii), np.log(errs), 1)[0]
    assert -1.3 < order < -0.7
    assert errs[-1] < 1e-5


def test_jacobian_values():
    tr0 = constant_trajectory((0, 0, 0), (-10, 10))
    s0 = solve_retarded(tr0, 5.0, (3, 0, 0))
    assert lightcone_jacobian(s0, (1, 0, 0)) == pytest.approx(1.0)

    trv = piecewise_linear_trajectory([-200, 200], [(-100, 0, 0), (100, 0, 0)])
    sv = solve_retarded(trv, 0.0, (30, 0, 0))
    assert lightcone_jacobian(sv, (1, 0, 0)) == pytest.approx(2.0, rel=1e-12)
    assert lightcone_jacobian(sv, (0, 1, 0)) == pytest.approx(1.0, rel=1e-12)


def test_jacobian_matches_finite_difference():
    # central finite-difference oracle on the far-zone cone map
    tr = trajectory_from_velocity_profile(
        0.0, (0.2, -0.1, 0.05), [0.0], [(0.3, 0.1, 0), (-0.2, 0.2, 0.1)], (-60, 60))
    n = np.array([0.48, -0.6, 0.64])
    n = n / np.linalg.norm(n)
    h = 1e-5
    for t_obs in (-5.3, 2.1, 7.7):
        sol = solve_retarded_far(tr, t_obs, n)
        if sol.at_breakpoint:
            continue
        tp = solve_retarded_far(tr, t_obs + h, n).t_cone
        tm = solve_retarded_far(tr, t_obs - h, n).t_cone
        fd = (tp - tm) / (2 * h)
        assert fd == pytest.approx(sol.jacobian, rel=1e-6)
        assert fd == pytest.approx(lightcone_jacobian(sol, n), rel=1e-6)


def test_far_monotone_in_t():
    tr = trajectory_from_velocity_profile(
        0.0, (0, 0, 0), [0.0], [(0.4, 0, 0), (-0.4, 0, 0)], (-80, 80))
    n = np.array([0.0, 1.0, 0.0])
    ts = np.linspace(-20, 20, 101)
    cones = [solve_retarded_far(tr, t, n).t_cone for t in ts]
    assert np.all(np.diff(cones) > 0)


def test_retarded_advanced_duality_random():
    rng = np.random.default_rng(7)
    for _ in range(20):
        vels = rng.uniform(-0.4, 0.4, size=(3, 3))
        jumps = np.sort(rng.uniform(-2, 2, size=2))
        if jumps[1] - jumps[0] < 1e-3:
            continue
        tr = trajectory_from_velocity_profile(0.0, rng.uniform(-1, 1, 3),
                                              jumps, vels, (-50, 50))
        rev = tr.reversed()
        t_ev = float(rng.uniform(-3, 3))
        p = rng.uniform(-5, 5, 3)
        ret = solve_retarded(tr, t_ev, p)
        adv = solve_advanced(rev, -t_ev, p)
        assert abs(adv.t_cone + ret.t_cone) < 1e-12 * (1 + abs(ret.t_cone))


def test_cone_time_difference_relation():
    # t1- - t2- = n.(x1(t1-) - x2(t2-)) for far cones at a common (t, n)
    tr1 = trajectory_from_velocity_profile(
        0.0, (1, 0, 0), [0.0], [(0.2, 0, 0), (-0.2, 0, 0)], (-40, 40))
    tr2 = trajectory_from_velocity_profile(
        0.0, (-1, 0, 0), [0.5], [(-0.1, 0.2, 0), (0.1, -0.2, 0)], (-40, 40))
    rng = np.random.default_rng(3)
    for _ in range(25):
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        t = float(rng.uniform(-10, 10))
        s1 = solve_retarded_far(tr1, t, n)
        s2 = solve_retarded_far(tr2, t, n)
        lhs = s1.t_cone - s2.t_cone
        rhs = float(n @ (s1.pos - s2.pos))
        assert abs(lhs - rhs) < 1e-10


def test_breakpoint_flagging():
    tr = trajectory_from_velocity_profile(
        0.0, (0, 0, 0), [0.0], [(0.1, 0, 0), (-0.1, 0, 0)], (-50, 50))
    # static before t=0 at origin: retarded cone of (t=5, p=(5,0,0)) is exactly 0
    sol = solve_retarded(tr, 5.0, (5, 0, 0))
    assert abs(sol.t_cone) < 1e-9
    assert sol.at_breakpoint
    # causal (below) side kinematics at the jump
    assert np.allclose(sol.vel, [0.1, 0, 0])


def test_influence_interval():
    tr2 = constant_trajectory((0, 0, 0), (-10, 20))
    ii = influence_interval(0.0, (2, 0, 0), tr2)
    assert ii.t_min == pytest.approx(-2.0)
    assert ii.t_max == pytest.approx(2.0)
    assert ii.width == pytest.approx(2 * 2.0)

    tr5 = constant_trajectory((3, 4, 0), (-10, 20))
    ii5 = influence_interval(10.0, (0, 0, 0), tr5)
    assert ii5.t_min == pytest.approx(5.0)
    assert ii5.t_max == pytest.approx(15.0)

    with pytest.raises(DegenerateInterval):
        influence_interval(0.0, (0, 0, 0), tr2)
    with pytest.raises(OutOfDomain):
        influence_interval(100.0, (2, 0, 0), tr2)


def test_residual_bound_randomized():
    rng = np.random.default_rng(11)
    for _ in range(50):
        k = rng.integers(1, 4)
        vels = rng.uniform(-0.5, 0.5, size=(k + 1, 3))
        jumps = np.sort(rng.uniform(-4, 4, size=k))
        if k > 1 and np.min(np.diff(jumps)) < 1e-6:
            continue
        tr = trajectory_from_velocity_profile(0.0, rng.uniform(-2, 2, 3),
                                              jumps, vels, (-200, 200))
        t_ev = float(rng.uniform(-20, 20))
        p = rng.uniform(-10, 10, 3)
        sol = solve_retarded(tr, t_ev, p)
        x = tr.position(sol.t_cone)
        resid = abs(sol.t_cone - (t_ev - np.linalg.norm(x - p)))
        assert resid < 1e-12 * (1 + abs(t_ev))
        assert sol.jacobian > 0
