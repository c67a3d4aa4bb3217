"""Pure-numpy kernels for the affine-invariant SPD geometry.

This module is the reference implementation; ``_spdcore`` (Cython + LAPACK)
mirrors it operation for operation. Both backends use the same algorithm:
symmetric eigendecomposition for every matrix function, eigenvalues floored
at ``LOG_FLOOR`` before taking logs, and the same descent loop for the
Fréchet-mean solver, so their outputs agree to rounding error.

All functions take C-contiguous float64 arrays and perform no validation;
callers (the ``Spd`` manifold, ``ifme``) own the contracts.
"""

import numpy as np

# Guards against log/pow of eigenvalues that rounded to <= 0. Inputs are
# validated SPD so this only matters for intermediate products.
LOG_FLOOR = 1e-300


def _sym(a):
    return 0.5 * (a + a.T)


def _sqrt_factors(a):
    """Return (a^{1/2}, a^{-1/2}) from one eigendecomposition."""
    w, v = np.linalg.eigh(a)
    w = np.maximum(w, LOG_FLOOR)
    s = np.sqrt(w)
    return (v * s) @ v.T, (v / s) @ v.T


def logm(a):
    w, v = np.linalg.eigh(a)
    return (v * np.log(np.maximum(w, LOG_FLOOR))) @ v.T


def expm(a):
    w, v = np.linalg.eigh(a)
    return (v * np.exp(w)) @ v.T


def spd_distance(a, b):
    """Affine-invariant distance ||logm(a^{-1/2} b a^{-1/2})||_F."""
    _, isq = _sqrt_factors(a)
    w = np.linalg.eigvalsh(isq @ b @ isq)
    return float(np.sqrt(np.sum(np.log(np.maximum(w, LOG_FLOOR)) ** 2)))


def spd_geodesic(a, b, t):
    """Point at parameter t on the geodesic from a to b."""
    sq, isq = _sqrt_factors(a)
    w, v = np.linalg.eigh(isq @ b @ isq)
    mid = (v * np.maximum(w, LOG_FLOOR) ** t) @ v.T
    return _sym(sq @ mid @ sq)


def spd_log(p, q):
    """Tangent vector at p pointing to q: p^{1/2} logm(p^{-1/2} q p^{-1/2}) p^{1/2}."""
    sq, isq = _sqrt_factors(p)
    return _sym(sq @ logm(isq @ q @ isq) @ sq)


def spd_exp(p, v):
    """Geodesic shot from p along symmetric tangent v."""
    sq, isq = _sqrt_factors(p)
    return _sym(sq @ expm(isq @ v @ isq) @ sq)


def spd_ifme(points, tsteps):
    """Run the geodesic recursion over a stack of SPD matrices.

    ``tsteps[i]`` is the geodesic parameter used at step i; ``tsteps[0]`` is
    ignored (the recursion starts at ``points[0]``).
    """
    m = np.array(points[0])
    for i in range(1, points.shape[0]):
        m = spd_geodesic(m, points[i], tsteps[i])
    return m


def spd_frechet_descent(points, weights, step, tol, max_iter):
    """Riemannian gradient descent for the weighted Fréchet mean.

    Iterates ``M <- exp_M(step * sum_i w_i log_M(X_i))`` with weights
    normalized to sum 1, starting at ``points[0]``. Stops once the gradient
    norm (Frobenius norm in whitened coordinates, which equals the
    affine-invariant tangent norm at M) drops below ``tol``.

    Returns ``(M, residual, iterations)``; the caller decides whether a
    residual >= tol is an error.
    """
    wn = np.asarray(weights, dtype=np.float64)
    wn = wn / wn.sum()
    m = np.array(points[0])
    resid = np.inf
    for it in range(max_iter):
        sq, isq = _sqrt_factors(m)
        c = isq[None] @ points @ isq[None]
        wc, vc = np.linalg.eigh(c)
        logs = np.einsum(
            "nij,nj,nkj->ik", vc, wn[:, None] * np.log(np.maximum(wc, LOG_FLOOR)), vc
        )
        grad = _sym(logs)
        resid = float(np.linalg.norm(grad))
        if resid < tol:
            return m, resid, it
        m = _sym(sq @ expm(step * grad) @ sq)
    return m, resid, max_iter


def spd_distances_to(m, points):
    """Distances from one SPD matrix to each matrix in a stack."""
    _, isq = _sqrt_factors(m)
    c = isq[None] @ points @ isq[None]
    w = np.linalg.eigvalsh(c)
    return np.sqrt(np.sum(np.log(np.maximum(w, LOG_FLOOR)) ** 2, axis=1))
