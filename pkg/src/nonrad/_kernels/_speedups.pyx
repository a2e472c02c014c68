# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend; the Cython twin of ``_ref.py``.

Keep the algorithms in lockstep with ``_ref.py`` so the two backends give
identical floating-point results.
"""

import numpy as np

from libc.math cimport fabs, isfinite, sqrt, NAN

BACKEND = "cython"

OK = 0
ROOT_BELOW = 1
ROOT_ABOVE = 2
BAD_BRACKET = 3

cdef double _BISECT_WIDTH = 1e-9
cdef double _BP_GUARD = 2e-9
cdef double _FINE_SCALE = 1e-13

cdef int _OK = 0
cdef int _ROOT_BELOW = 1
cdef int _ROOT_ABOVE = 2
cdef int _BAD_BRACKET = 3


cdef class TrajHandle:
    cdef const double[::1] breaks
    cdef const double[:, :, ::1] coeffs
    cdef int nseg


def prepare(breaks, coeffs):
    """Preprocess trajectory arrays into the backend's working form."""
    cdef TrajHandle h = TrajHandle()
    h.breaks = np.ascontiguousarray(breaks, dtype=np.float64)
    h.coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    h.nseg = h.coeffs.shape[0]
    return h


cdef inline int _seg_index(TrajHandle h, double t, bint from_right) nogil:
    # bisect over breaks; from_right selects the (a,b] vs [a,b) convention
    cdef int lo = 0, hi = h.nseg + 1, mid
    if from_right:
        while lo < hi:
            mid = (lo + hi) >> 1
            if h.breaks[mid] <= t:
                lo = mid + 1
            else:
                hi = mid
    else:
        while lo < hi:
            mid = (lo + hi) >> 1
            if h.breaks[mid] < t:
                lo = mid + 1
            else:
                hi = mid
    cdef int i = lo - 1
    if i < 0:
        i = 0
    elif i > h.nseg - 1:
        i = h.nseg - 1
    return i


cdef inline void _pos_c(TrajHandle h, double t, double* px, double* py, double* pz) nogil:
    cdef int i = _seg_index(h, t, 0)
    cdef double u = t - h.breaks[i]
    px[0] = h.coeffs[i, 0, 0] + u * (h.coeffs[i, 1, 0] + u * (h.coeffs[i, 2, 0] + u * h.coeffs[i, 3, 0]))
    py[0] = h.coeffs[i, 0, 1] + u * (h.coeffs[i, 1, 1] + u * (h.coeffs[i, 2, 1] + u * h.coeffs[i, 3, 1]))
    pz[0] = h.coeffs[i, 0, 2] + u * (h.coeffs[i, 1, 2] + u * (h.coeffs[i, 2, 2] + u * h.coeffs[i, 3, 2]))


cdef inline void _state_c(TrajHandle h, double t, bint from_right, double* out) nogil:
    cdef int i = _seg_index(h, t, from_right)
    cdef double u = t - h.breaks[i]
    cdef int k
    for k in range(3):
        out[k] = h.coeffs[i, 0, k] + u * (h.coeffs[i, 1, k] + u * (h.coeffs[i, 2, k] + u * h.coeffs[i, 3, k]))
        out[3 + k] = h.coeffs[i, 1, k] + u * (2.0 * h.coeffs[i, 2, k] + u * 3.0 * h.coeffs[i, 3, k])
        out[6 + k] = 2.0 * h.coeffs[i, 2, k] + u * 6.0 * h.coeffs[i, 3, k]


def eval_state(TrajHandle h, double t, bint from_right):
    """(px,py,pz, vx,vy,vz, ax,ay,az) with one-sided segment selection."""
    cdef double out[9]
    _state_c(h, t, from_right, out)
    return (out[0], out[1], out[2], out[3], out[4], out[5], out[6], out[7], out[8])


cdef inline double _nearest_break_dist_c(TrajHandle h, double t) nogil:
    cdef int n = h.nseg + 1
    cdef int lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if h.breaks[mid] < t:
            lo = mid + 1
        else:
            hi = mid
    cdef double d, d2
    if lo < n:
        d = fabs(h.breaks[lo] - t)
    else:
        d = fabs(h.breaks[n - 1] - t)
    if lo > 0:
        d2 = fabs(t - h.breaks[lo - 1])
        if d2 < d:
            d = d2
    return d


# mode 0: far cone (args = n, sgn), mode 1: exact cone (args = p, sgn)
cdef inline double _g(TrajHandle h, double s, int mode, double a0, double a1, double a2,
                      double sgn, double t_ref) nogil:
    cdef double x, y, z, dx, dy, dz
    _pos_c(h, s, &x, &y, &z)
    if mode == 0:
        return s + sgn * (a0 * x + a1 * y + a2 * z) - t_ref
    dx = x - a0
    dy = y - a1
    dz = z - a2
    return s + sgn * sqrt(dx * dx + dy * dy + dz * dz) - t_ref


cdef inline double _gp(TrajHandle h, double s, int mode, double a0, double a1, double a2,
                       double sgn) nogil:
    cdef double st[9]
    cdef double dx, dy, dz, r
    _state_c(h, s, 0, st)
    if mode == 0:
        return 1.0 + sgn * (a0 * st[3] + a1 * st[4] + a2 * st[5])
    dx = st[0] - a0
    dy = st[1] - a1
    dz = st[2] - a2
    r = sqrt(dx * dx + dy * dy + dz * dz)
    if r < 1e-14:
        return 1.0
    return 1.0 + sgn * (dx * st[3] + dy * st[4] + dz * st[5]) / r


cdef int _solve_c(TrajHandle h, int mode, double a0, double a1, double a2, double sgn,
                  double t_ref, double lo, double hi, double* root) nogil:
    cdef double glo, ghi, mid, gm, target, s, gs, gp, step, s_new
    cdef int it
    if not (lo < hi) or not (isfinite(lo) and isfinite(hi)):
        root[0] = 0.0
        return _BAD_BRACKET
    glo = _g(h, lo, mode, a0, a1, a2, sgn, t_ref)
    ghi = _g(h, hi, mode, a0, a1, a2, sgn, t_ref)
    if not (isfinite(glo) and isfinite(ghi)):
        root[0] = 0.0
        return _BAD_BRACKET
    if glo > 0.0:
        root[0] = lo
        return _ROOT_BELOW
    if ghi < 0.0:
        root[0] = hi
        return _ROOT_ABOVE
    if glo == 0.0:
        root[0] = lo
        return _OK
    if ghi == 0.0:
        root[0] = hi
        return _OK
    for it in range(200):
        if hi - lo <= _BISECT_WIDTH:
            break
        mid = 0.5 * (lo + hi)
        gm = _g(h, mid, mode, a0, a1, a2, sgn, t_ref)
        if gm > 0.0:
            hi = mid
        elif gm < 0.0:
            lo = mid
        else:
            root[0] = mid
            return _OK
    mid = 0.5 * (lo + hi)
    if _nearest_break_dist_c(h, mid) <= _BP_GUARD:
        target = _FINE_SCALE * (1.0 + fabs(t_ref))
        for it in range(200):
            if hi - lo <= target:
                break
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            gm = _g(h, mid, mode, a0, a1, a2, sgn, t_ref)
            if gm > 0.0:
                hi = mid
            elif gm < 0.0:
                lo = mid
            else:
                root[0] = mid
                return _OK
        root[0] = 0.5 * (lo + hi)
        return _OK
    s = mid
    for it in range(12):
        gs = _g(h, s, mode, a0, a1, a2, sgn, t_ref)
        gp = _gp(h, s, mode, a0, a1, a2, sgn)
        step = gs / gp
        s_new = s - step
        if s_new < lo:
            s_new = lo
        elif s_new > hi:
            s_new = hi
        if fabs(s_new - s) <= 1e-15 * (1.0 + fabs(s_new)):
            s = s_new
            break
        s = s_new
    root[0] = s
    return _OK


def cone_far(TrajHandle h, double t_obs, double nx, double ny, double nz,
             bint advanced, double lo, double hi):
    """Solve the far-zone cone condition; see _ref.cone_far."""
    cdef double sgn = 1.0 if advanced else -1.0
    cdef double root
    cdef int st = _solve_c(h, 0, nx, ny, nz, sgn, t_obs, lo, hi, &root)
    return (root, st)


def cone_exact(TrajHandle h, double t_event, double px, double py, double pz,
               bint advanced, double lo, double hi):
    """Solve the exact cone condition; see _ref.cone_exact."""
    cdef double sgn = -1.0 if advanced else 1.0
    cdef double root
    cdef int st = _solve_c(h, 1, px, py, pz, sgn, t_event, lo, hi, &root)
    return (root, st)


def retarded_far_fields(TrajHandle h, double q, t_obs_arr, n_arr, double lo, double hi):
    """Batch retarded far fields R*E for one particle; see _ref version."""
    cdef double[::1] tv = np.ascontiguousarray(t_obs_arr, dtype=np.float64)
    cdef double[:, ::1] nv = np.ascontiguousarray(n_arr, dtype=np.float64)
    cdef int m = tv.shape[0]
    E_np = np.empty((m, 3))
    tc_np = np.empty(m)
    status_np = np.zeros(m, dtype=np.int32)
    cdef double[:, ::1] E = E_np
    cdef double[::1] tc = tc_np
    cdef int[::1] status = status_np
    cdef int i, st
    cdef double t_obs, nx, ny, nz, s
    cdef double stt[9]
    cdef double vx, vy, vz, ax, ay, az, wx, wy, wz, cx, cy, cz, J, f
    with nogil:
        for i in range(m):
            t_obs = tv[i]
            nx = nv[i, 0]
            ny = nv[i, 1]
            nz = nv[i, 2]
            st = _solve_c(h, 0, nx, ny, nz, -1.0, t_obs, lo, hi, &s)
            tc[i] = s
            status[i] = st
            if st != _OK:
                E[i, 0] = NAN
                E[i, 1] = NAN
                E[i, 2] = NAN
                continue
            _state_c(h, s, 0, stt)
            vx = stt[3]; vy = stt[4]; vz = stt[5]
            ax = stt[6]; ay = stt[7]; az = stt[8]
            wx = nx - vx; wy = ny - vy; wz = nz - vz
            cx = wy * az - wz * ay
            cy = wz * ax - wx * az
            cz = wx * ay - wy * ax
            J = 1.0 / (1.0 - (nx * vx + ny * vy + nz * vz))
            f = q * J * J * J
            E[i, 0] = (ny * cz - nz * cy) * f
            E[i, 1] = (nz * cx - nx * cz) * f
            E[i, 2] = (nx * cy - ny * cx) * f
    return E_np, tc_np, status_np
