#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Runs the hot paths (far-zone cone solves and batched far fields) on both
backends with identical inputs, asserts the outputs agree exactly, and
prints the timing ratio.

    python benchmarks/bench_kernels.py [--samples N]
"""

import argparse
import time

import numpy as np

from nonrad._kernels import _ref
from nonrad.core import (hermite_circle_trajectory,
                         trajectory_from_velocity_profile)

try:
    from nonrad._kernels import _speedups
except ImportError:
    _speedups = None


def workloads(samples, rng):
    chain = trajectory_from_velocity_profile(
        0.0, (0, 0, 1), [-2.0, 0.0, 2.0],
        [(0.15, 0, 0), (0, 0.2, 0), (-0.1, -0.1, 0), (-0.15, 0, 0)], (-60, 60))
    circle = hermite_circle_trajectory((0, 0, 0), 0.5, 0.2, 0.0, (-60, 60), 256)
    t_obs = rng.uniform(-10, 10, samples)
    dirs = rng.normal(size=(samples, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    return [("polygonal chain", chain, t_obs, dirs),
            ("hermite circle", circle, t_obs, dirs)]


def run(backend, traj, t_obs, dirs):
    breaks, coeffs = traj.as_arrays()
    handle = backend.prepare(breaks, coeffs)
    lo, hi = traj.domain
    start = time.perf_counter()
    out = backend.retarded_far_fields(handle, 1.0, t_obs, dirs, lo, hi)
    batch_time = time.perf_counter() - start
    start = time.perf_counter()
    for i in range(min(2000, len(t_obs))):
        backend.cone_far(handle, float(t_obs[i]), dirs[i, 0], dirs[i, 1],
                         dirs[i, 2], False, lo, hi)
    scalar_time = time.perf_counter() - start
    return out, batch_time, scalar_time


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--samples", type=int, default=20000)
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    print(f"{'workload':<18} {'backend':<8} {'batch [ms]':>12} {'scalar [ms]':>12}")
    for name, traj, t_obs, dirs in workloads(args.samples, rng):
        ref_out, ref_batch, ref_scalar = run(_ref, traj, t_obs, dirs)
        print(f"{name:<18} {'python':<8} {1e3*ref_batch:12.1f} {1e3*ref_scalar:12.1f}")
        if _speedups is None:
            print(f"{name:<18} {'cython':<8} {'(not built)':>12}")
            continue
        cy_out, cy_batch, cy_scalar = run(_speedups, traj, t_obs, dirs)
        assert np.array_equal(ref_out[0], cy_out[0]), "field mismatch"
        assert np.array_equal(ref_out[1], cy_out[1]), "cone-time mismatch"
        assert np.array_equal(ref_out[2], cy_out[2]), "status mismatch"
        print(f"{name:<18} {'cython':<8} {1e3*cy_batch:12.1f} {1e3*cy_scalar:12.1f}"
              f"   (x{ref_batch/cy_batch:.0f} batch, x{ref_scalar/cy_scalar:.0f} scalar)")
    if _speedups is not None:
        print("outputs agree exactly between backends")


if __name__ == "__main__":
    main()
