"""Kernel backend selection.

The compiled extension (``_speedups``) is used when available; setting
``NONRAD_PURE_PYTHON=1`` or a failed build selects the pure-Python twin
(``_ref``).  Both expose the same functions with identical semantics.
"""

import os

if os.environ.get("NONRAD_PURE_PYTHON"):
    from . import _ref as _impl
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _ref as _impl

BACKEND = _impl.BACKEND

OK = _impl.OK
ROOT_BELOW = _impl.ROOT_BELOW
ROOT_ABOVE = _impl.ROOT_ABOVE
BAD_BRACKET = _impl.BAD_BRACKET

prepare = _impl.prepare
eval_state = _impl.eval_state
cone_far = _impl.cone_far
cone_exact = _impl.cone_exact
retarded_far_fields = _impl.retarded_far_fields


def handle_for(traj):
    """Cached backend handle for a PiecewiseTrajectory."""
    h = getattr(traj, "_kernel_handle", None)
    if h is None or h[0] is not _impl:
        breaks, coeffs = traj.as_arrays()
        h = (_impl, prepare(breaks, coeffs))
        traj._kernel_handle = h
    return h[1]
