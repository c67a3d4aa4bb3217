# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""LAPACK-backed kernels for the affine-invariant SPD geometry.

Mirror of ``spd_numpy`` with the Python/numpy overhead stripped out: every
matrix function goes through one dsyev call on stack buffers, and the two
hot loops (the geodesic recursion and the Fréchet-mean descent) run entirely
without the GIL so finite-difference evaluations can thread.

Matrices are limited to n <= 32 (the dispatch layer falls back to numpy
above that). Buffers live on the C stack, so every call is thread-safe.
"""

import numpy as np

from libc.math cimport exp, log, pow, sqrt
from libc.string cimport memcpy, memset
from scipy.linalg.cython_lapack cimport dsyev

cdef enum:
    NMAX = 32
    NMAX2 = 1024        # NMAX * NMAX
    LWORK = 3232        # > 3*NMAX - 1, room to spare for blocked dsyev
    WMAX = 4096         # point-count cap for the descent kernel

cdef double LOG_FLOOR = 1e-300

NMAX_PY = NMAX
WMAX_PY = WMAX


cdef int _eig(double* a, int n, double* w, double* work, bint vectors) noexcept nogil:
    """In-place symmetric eigendecomposition.

    On exit with vectors=True, C-row k of ``a`` holds eigenvector k
    (LAPACK returns them as Fortran columns).
    """
    cdef char jobz = b'V' if vectors else b'N'
    cdef char uplo = b'L'
    cdef int info = 0, lwork = LWORK
    dsyev(&jobz, &uplo, &n, a, &n, w, work, &lwork, &info)
    return info


cdef void _mm(const double* a, const double* b, double* out, int n) noexcept nogil:
    cdef int i, j, k
    cdef double aik
    memset(out, 0, n * n * sizeof(double))
    for i in range(n):
        for k in range(n):
            aik = a[i * n + k]
            for j in range(n):
                out[i * n + j] += aik * b[k * n + j]


cdef void _congruence(const double* f, const double* b, double* out,
                      double* tmp, int n) noexcept nogil:
    """out = f @ b @ f for symmetric f."""
    _mm(f, b, tmp, n)
    _mm(tmp, f, out, n)


cdef void _rank1_fn(const double* vecs, const double* w, int n, double* out,
                    int code, double t) noexcept nogil:
    """out = sum_k fn(w_k) v_k v_k^T, v_k = C-row k of vecs.

    code: 1 = log, 2 = exp, 3 = pow(., t).
    """
    cdef int i, j, k
    cdef double f, vi
    memset(out, 0, n * n * sizeof(double))
    for k in range(n):
        if code == 1:
            f = log(max(w[k], LOG_FLOOR))
        elif code == 2:
            f = exp(w[k])
        else:
            f = pow(max(w[k], LOG_FLOOR), t)
        for i in range(n):
            vi = f * vecs[k * n + i]
            for j in range(n):
                out[i * n + j] += vi * vecs[k * n + j]


cdef int _sqrt_pair(const double* a, int n, double* sq, double* isq,
                    double* evbuf, double* w, double* work) noexcept nogil:
    """Compute a^{1/2} and a^{-1/2} from one eigendecomposition."""
    cdef int i, j, k, info
    cdef double s, si, vi, ui
    memcpy(evbuf, a, n * n * sizeof(double))
    info = _eig(evbuf, n, w, work, True)
    if info != 0:
        return info
    memset(sq, 0, n * n * sizeof(double))
    memset(isq, 0, n * n * sizeof(double))
    for k in range(n):
        s = sqrt(max(w[k], LOG_FLOOR))
        si = 1.0 / s
        for i in range(n):
            vi = s * evbuf[k * n + i]
            ui = si * evbuf[k * n + i]
            for j in range(n):
                sq[i * n + j] += vi * evbuf[k * n + j]
                isq[i * n + j] += ui * evbuf[k * n + j]
    return 0


cdef void _symmetrize(double* a, int n) noexcept nogil:
    cdef int i, j
    cdef double v
    for i in range(n):
        for j in range(i):
            v = 0.5 * (a[i * n + j] + a[j * n + i])
            a[i * n + j] = v
            a[j * n + i] = v


cdef double _log_norm_sq(double* c, int n, double* w, double* work) noexcept nogil:
    """sum_k log(eig_k(c))^2; destroys c."""
    cdef int k
    cdef double acc = 0.0, lw
    _eig(c, n, w, work, False)
    for k in range(n):
        lw = log(max(w[k], LOG_FLOOR))
        acc += lw * lw
    return acc


cdef double _distance_c(const double* a, const double* b, int n) noexcept nogil:
    cdef double sq[NMAX2]
    cdef double isq[NMAX2]
    cdef double evbuf[NMAX2]
    cdef double tmp[NMAX2]
    cdef double c[NMAX2]
    cdef double w[NMAX]
    cdef double work[LWORK]
    _sqrt_pair(a, n, sq, isq, evbuf, w, work)
    _congruence(isq, b, c, tmp, n)
    return sqrt(_log_norm_sq(c, n, w, work))


cdef void _geodesic_c(const double* a, const double* b, double t,
                      double* out, int n) noexcept nogil:
    cdef double sq[NMAX2]
    cdef double isq[NMAX2]
    cdef double evbuf[NMAX2]
    cdef double tmp[NMAX2]
    cdef double mid[NMAX2]
    cdef double w[NMAX]
    cdef double work[LWORK]
    _sqrt_pair(a, n, sq, isq, evbuf, w, work)
    _congruence(isq, b, evbuf, tmp, n)
    _eig(evbuf, n, w, work, True)
    _rank1_fn(evbuf, w, n, mid, 3, t)
    _congruence(sq, mid, out, tmp, n)
    _symmetrize(out, n)


cdef void _map_c(const double* p, const double* x, double* out, int n,
                 int code) noexcept nogil:
    """out = p^{1/2} fn(p^{-1/2} x p^{-1/2}) p^{1/2}, fn = log or exp."""
    cdef double sq[NMAX2]
    cdef double isq[NMAX2]
    cdef double evbuf[NMAX2]
    cdef double tmp[NMAX2]
    cdef double mid[NMAX2]
    cdef double w[NMAX]
    cdef double work[LWORK]
    _sqrt_pair(p, n, sq, isq, evbuf, w, work)
    _congruence(isq, x, evbuf, tmp, n)
    _eig(evbuf, n, w, work, True)
    _rank1_fn(evbuf, w, n, mid, code, 0.0)
    _congruence(sq, mid, out, tmp, n)
    _symmetrize(out, n)


def spd_distance(double[:, ::1] a, double[:, ::1] b):
    cdef int n = a.shape[0]
    cdef double d
    with nogil:
        d = _distance_c(&a[0, 0], &b[0, 0], n)
    return d


def spd_geodesic(double[:, ::1] a, double[:, ::1] b, double t):
    cdef int n = a.shape[0]
    out_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        _geodesic_c(&a[0, 0], &b[0, 0], t, &out[0, 0], n)
    return out_arr


def spd_log(double[:, ::1] p, double[:, ::1] q):
    cdef int n = p.shape[0]
    out_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        _map_c(&p[0, 0], &q[0, 0], &out[0, 0], n, 1)
    return out_arr


def spd_exp(double[:, ::1] p, double[:, ::1] v):
    cdef int n = p.shape[0]
    out_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        _map_c(&p[0, 0], &v[0, 0], &out[0, 0], n, 2)
    return out_arr


def spd_ifme(double[:, :, ::1] points, double[::1] tsteps):
    cdef int count = points.shape[0]
    cdef int n = points.shape[1]
    cdef int i
    out_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double cur[NMAX2]
    with nogil:
        memcpy(cur, &points[0, 0, 0], n * n * sizeof(double))
        for i in range(1, count):
            _geodesic_c(cur, &points[i, 0, 0], tsteps[i], &out[0, 0], n)
            memcpy(cur, &out[0, 0], n * n * sizeof(double))
        memcpy(&out[0, 0], cur, n * n * sizeof(double))
    return out_arr


def spd_frechet_descent(double[:, :, ::1] points, double[::1] weights,
                        double step, double tol, int max_iter):
    cdef int count = points.shape[0]
    cdef int n = points.shape[1]
    cdef int it = 0, idx, i, j, k
    cdef double wsum = 0.0, resid = 0.0, f, vi
    cdef bint done = False
    cdef double wn[WMAX]
    cdef double m[NMAX2]
    cdef double sq[NMAX2]
    cdef double isq[NMAX2]
    cdef double evbuf[NMAX2]
    cdef double tmp[NMAX2]
    cdef double grad[NMAX2]
    cdef double w[NMAX]
    cdef double work[LWORK]
    if count > WMAX:
        raise ValueError("too many points for the compiled descent kernel")
    out_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for idx in range(count):
            wsum += weights[idx]
        for idx in range(count):
            wn[idx] = weights[idx] / wsum
        memcpy(m, &points[0, 0, 0], n * n * sizeof(double))
        for it in range(max_iter):
            _sqrt_pair(m, n, sq, isq, evbuf, w, work)
            memset(grad, 0, n * n * sizeof(double))
            for idx in range(count):
                _congruence(isq, &points[idx, 0, 0], evbuf, tmp, n)
                _eig(evbuf, n, w, work, True)
                for k in range(n):
                    f = wn[idx] * log(max(w[k], LOG_FLOOR))
                    for i in range(n):
                        vi = f * evbuf[k * n + i]
                        for j in range(n):
                            grad[i * n + j] += vi * evbuf[k * n + j]
            _symmetrize(grad, n)
            resid = 0.0
            for i in range(n * n):
                resid += grad[i] * grad[i]
            resid = sqrt(resid)
            if resid < tol:
                done = True
                break
            for i in range(n * n):
                evbuf[i] = step * grad[i]
            _eig(evbuf, n, w, work, True)
            _rank1_fn(evbuf, w, n, grad, 2, 0.0)
            _congruence(sq, grad, m, tmp, n)
            _symmetrize(m, n)
        memcpy(&out[0, 0], m, n * n * sizeof(double))
    return out_arr, resid, (it if done else max_iter)


def spd_distances_to(double[:, ::1] m, double[:, :, ::1] points):
    cdef int count = points.shape[0]
    cdef int n = m.shape[0]
    cdef int idx
    out_arr = np.empty(count, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double sq[NMAX2]
    cdef double isq[NMAX2]
    cdef double evbuf[NMAX2]
    cdef double tmp[NMAX2]
    cdef double c[NMAX2]
    cdef double w[NMAX]
    cdef double work[LWORK]
    with nogil:
        _sqrt_pair(&m[0, 0], n, sq, isq, evbuf, w, work)
        for idx in range(count):
            _congruence(isq, &points[idx, 0, 0], c, tmp, n)
            out[idx] = sqrt(_log_norm_sq(c, n, w, work))
    return out_arr
