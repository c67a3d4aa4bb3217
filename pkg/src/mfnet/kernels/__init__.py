"""SPD geometry kernels with a compiled fast path.

At import time this package picks between two implementations of the same
operations:

* ``mfnet.kernels._spdcore`` — Cython + LAPACK, built by ``setup.py``;
* ``mfnet.kernels.spd_numpy`` — pure numpy, always available.

Set ``MFNET_PURE_PYTHON=1`` to force the numpy backend. The compiled kernels
handle matrices up to 32x32 (and up to 4096 points per descent call); larger
inputs transparently route to numpy. ``benchmarks/bench_kernels.py`` compares
the two.
"""

import os

import numpy as np

from . import spd_numpy as _py

if os.environ.get("MFNET_PURE_PYTHON"):
    _core = None
else:
    try:
        from . import _spdcore as _core
    except ImportError:
        _core = None

_NMAX = _core.NMAX_PY if _core is not None else 0
_WMAX = _core.WMAX_PY if _core is not None else 0


def backend_name():
    """Name of the backend serving small-matrix calls: 'cython' or 'numpy'."""
    return "numpy" if _core is None else "cython"


def _c2(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def spd_distance(a, b):
    a, b = _c2(a), _c2(b)
    if _core is not None and a.shape[0] <= _NMAX:
        return _core.spd_distance(a, b)
    return _py.spd_distance(a, b)


def spd_geodesic(a, b, t):
    a, b = _c2(a), _c2(b)
    if _core is not None and a.shape[0] <= _NMAX:
        return _core.spd_geodesic(a, b, float(t))
    return _py.spd_geodesic(a, b, t)


def spd_log(p, q):
    p, q = _c2(p), _c2(q)
    if _core is not None and p.shape[0] <= _NMAX:
        return _core.spd_log(p, q)
    return _py.spd_log(p, q)


def spd_exp(p, v):
    p, v = _c2(p), _c2(v)
    if _core is not None and p.shape[0] <= _NMAX:
        return _core.spd_exp(p, v)
    return _py.spd_exp(p, v)


def spd_ifme(points, tsteps):
    points = _c2(points)
    tsteps = np.ascontiguousarray(tsteps, dtype=np.float64)
    if _core is not None and points.shape[1] <= _NMAX:
        return _core.spd_ifme(points, tsteps)
    return _py.spd_ifme(points, tsteps)


def spd_frechet_descent(points, weights, step, tol, max_iter):
    points = _c2(points)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if (
        _core is not None
        and points.shape[1] <= _NMAX
        and points.shape[0] <= _WMAX
    ):
        return _core.spd_frechet_descent(points, weights, step, tol, max_iter)
    return _py.spd_frechet_descent(points, weights, step, tol, max_iter)


def spd_distances_to(m, points):
    m, points = _c2(m), _c2(points)
    if _core is not None and m.shape[0] <= _NMAX:
        return _core.spd_distances_to(m, points)
    return _py.spd_distances_to(m, points)
