"""Pure-Python kernel backend.

Mirrors ``_speedups.pyx`` operation-for-operation so both backends produce
identical floating-point results; keep the two files in lockstep when
changing either.  Hot paths use plain Python floats and lists, not numpy,
because per-element ndarray access dominates at these sizes.
"""

from __future__ import annotations

import bisect

import numpy as np

BACKEND = "python"

OK = 0
ROOT_BELOW = 1
ROOT_ABOVE = 2
BAD_BRACKET = 3

_BISECT_WIDTH = 1e-9
_BP_GUARD = 2e-9
_FINE_SCALE = 1e-13


def prepare(breaks, coeffs):
    """Preprocess trajectory arrays into the backend's working form."""
    b = [float(x) for x in breaks]
    segs = []
    for i in range(len(b) - 1):
        c = coeffs[i]
        segs.append((b[i],
                     float(c[0][0]), float(c[0][1]), float(c[0][2]),
                     float(c[1][0]), float(c[1][1]), float(c[1][2]),
                     float(c[2][0]), float(c[2][1]), float(c[2][2]),
                     float(c[3][0]), float(c[3][1]), float(c[3][2])))
    return (b, segs)


def _seg_at(handle, t, from_right):
    b, segs = handle
    if from_right:
        i = bisect.bisect_right(b, t) - 1
    else:
        i = bisect.bisect_left(b, t) - 1
    if i < 0:
        i = 0
    elif i > len(segs) - 1:
        i = len(segs) - 1
    return segs[i]


def _pos(handle, t):
    s = _seg_at(handle, t, False)
    u = t - s[0]
    return (s[1] + u * (s[4] + u * (s[7] + u * s[10])),
            s[2] + u * (s[5] + u * (s[8] + u * s[11])),
            s[3] + u * (s[6] + u * (s[9] + u * s[12])))


def eval_state(handle, t, from_right):
    """(px,py,pz, vx,vy,vz, ax,ay,az) with one-sided segment selection."""
    s = _seg_at(handle, t, from_right)
    u = t - s[0]
    px = s[1] + u * (s[4] + u * (s[7] + u * s[10]))
    py = s[2] + u * (s[5] + u * (s[8] + u * s[11]))
    pz = s[3] + u * (s[6] + u * (s[9] + u * s[12]))
    vx = s[4] + u * (2.0 * s[7] + u * 3.0 * s[10])
    vy = s[5] + u * (2.0 * s[8] + u * 3.0 * s[11])
    vz = s[6] + u * (2.0 * s[9] + u * 3.0 * s[12])
    ax = 2.0 * s[7] + u * 6.0 * s[10]
    ay = 2.0 * s[8] + u * 6.0 * s[11]
    az = 2.0 * s[9] + u * 6.0 * s[12]
    return (px, py, pz, vx, vy, vz, ax, ay, az)


def _nearest_break_dist(handle, t):
    b = handle[0]
    i = bisect.bisect_left(b, t)
    d = abs(b[i] - t) if i < len(b) else abs(b[-1] - t)
    if i > 0:
        d2 = abs(t - b[i - 1])
        if d2 < d:
            d = d2
    return d


def cone_far(handle, t_obs, nx, ny, nz, advanced, lo, hi):
    """Solve the far-zone cone condition.

    Retarded:  s - n.x(s) = t_obs;  advanced:  s + n.x(s) = t_obs.
    Both sides are strictly increasing in s for subluminal trajectories.
    Returns (t_cone, status).
    """
    sgn = 1.0 if advanced else -1.0

    def g(s):
        x, y, z = _pos(handle, s)
        return s + sgn * (nx * x + ny * y + nz * z) - t_obs

    return _solve(handle, g, _gp_far, (nx, ny, nz, sgn), t_obs, lo, hi)


def _gp_far(handle, s, args):
    nx, ny, nz, sgn = args
    st = eval_state(handle, s, False)
    return 1.0 + sgn * (nx * st[3] + ny * st[4] + nz * st[5])


def cone_exact(handle, t_event, px, py, pz, advanced, lo, hi):
    """Solve the exact cone condition.

    Retarded:  s + |x(s) - p| = t_event;  advanced:  s - |x(s) - p| = t_event.
    Returns (t_cone, status).
    """
    sgn = -1.0 if advanced else 1.0

    def g(s):
        x, y, z = _pos(handle, s)
        dx, dy, dz = x - px, y - py, z - pz
        return s + sgn * (dx * dx + dy * dy + dz * dz) ** 0.5 - t_event

    return _solve(handle, g, _gp_exact, (px, py, pz, sgn), t_event, lo, hi)


def _gp_exact(handle, s, args):
    px, py, pz, sgn = args
    st = eval_state(handle, s, False)
    dx, dy, dz = st[0] - px, st[1] - py, st[2] - pz
    r = (dx * dx + dy * dy + dz * dz) ** 0.5
    if r < 1e-14:
        return 1.0
    return 1.0 + sgn * (dx * st[3] + dy * st[4] + dz * st[5]) / r


def _solve(handle, g, gprime, args, t_ref, lo, hi):
    if not (lo < hi) or not (np.isfinite(lo) and np.isfinite(hi)):
        return (0.0, BAD_BRACKET)
    glo = g(lo)
    ghi = g(hi)
    if not (np.isfinite(glo) and np.isfinite(ghi)):
        return (0.0, BAD_BRACKET)
    if glo > 0.0:
        return (lo, ROOT_BELOW)
    if ghi < 0.0:
        return (hi, ROOT_ABOVE)
    if glo == 0.0:
        return (lo, OK)
    if ghi == 0.0:
        return (hi, OK)
    # coarse bisection; monotone g keeps g(lo) < 0 < g(hi)
    for _ in range(200):
        if hi - lo <= _BISECT_WIDTH:
            break
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm > 0.0:
            hi = mid
        elif gm < 0.0:
            lo = mid
        else:
            return (mid, OK)
    mid = 0.5 * (lo + hi)
    if _nearest_break_dist(handle, mid) <= _BP_GUARD:
        # derivative may jump inside the bracket: bisection only
        target = _FINE_SCALE * (1.0 + abs(t_ref))
        for _ in range(200):
            if hi - lo <= target:
                break
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            gm = g(mid)
            if gm > 0.0:
                hi = mid
            elif gm < 0.0:
                lo = mid
            else:
                return (mid, OK)
        return (0.5 * (lo + hi), OK)
    # Newton polish inside a smooth segment
    s = mid
    for _ in range(12):
        gs = g(s)
        gp = gprime(handle, s, args)
        step = gs / gp
        s_new = s - step
        if s_new < lo:
            s_new = lo
        elif s_new > hi:
            s_new = hi
        if abs(s_new - s) <= 1e-15 * (1.0 + abs(s_new)):
            s = s_new
            break
        s = s_new
    return (s, OK)


def retarded_far_fields(handle, q, t_obs_arr, n_arr, lo, hi):
    """Batch retarded far fields R*E for one particle.

    E = q n x ((n - v) x a) / (1 - n.v)^3 with causal (left) one-sided
    kinematics at the far-zone retarded time of each (t_obs, n) row.
    Returns (E (m,3), t_cone (m,), status (m,)).
    """
    m = len(t_obs_arr)
    E = np.empty((m, 3))
    tc = np.empty(m)
    status = np.zeros(m, dtype=np.int32)
    tlist = [float(x) for x in t_obs_arr]
    nlist = [(float(r[0]), float(r[1]), float(r[2])) for r in n_arr]
    for i in range(m):
        t_obs = tlist[i]
        nx, ny, nz = nlist[i]
        s, st = cone_far(handle, t_obs, nx, ny, nz, False, lo, hi)
        tc[i] = s
        status[i] = st
        if st != OK:
            E[i, 0] = E[i, 1] = E[i, 2] = np.nan
            continue
        stt = eval_state(handle, s, False)
        vx, vy, vz = stt[3], stt[4], stt[5]
        ax, ay, az = stt[6], stt[7], stt[8]
        wx, wy, wz = nx - vx, ny - vy, nz - vz
        # c = w x a
        cx = wy * az - wz * ay
        cy = wz * ax - wx * az
        cz = wx * ay - wy * ax
        # e = n x c
        ex = ny * cz - nz * cy
        ey = nz * cx - nx * cz
        ez = nx * cy - ny * cx
        J = 1.0 / (1.0 - (nx * vx + ny * vy + nz * vz))
        f = q * J * J * J
        E[i, 0] = ex * f
        E[i, 1] = ey * f
        E[i, 2] = ez * f
    return E, tc, status
