"""Recursive weighted Fréchet mean estimation and its descent oracle.

The estimator walks one geodesic step per sample:

    M_1 = X_1,    M_n = geodesic(M_{n-1}, X_n, w_n / sum_{j<=n} w_j).

On curved manifolds the value depends on the sample order; that order
dependence is part of the contract (sequences are temporal), and the
recursion — not the exact minimizer — is the layer definition. Scaling all
weights by a constant leaves the step ratios unchanged: exactly invariant
in floating point for power-of-two scales, and to rounding error otherwise.

``wfm_oracle`` is the independent check: Riemannian gradient descent on the
weighted sum of squared distances, converging to the actual minimizer
whenever the samples sit in a ball where the mean is unique.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from ._parallel import ordered_map
from .errors import ConvergenceError, ValidationError
from .manifolds import BallSpec, Manifold, Spd

#: descent defaults: step 0.5 is contraction-safe at nonpositive curvature,
#: and samples on positively curved manifolds are restricted to small balls.
ORACLE_STEP = 0.5
ORACLE_TOL = 1e-10
ORACLE_MAX_ITER = 1000


@dataclass(frozen=True)
class WeightVector:
    """Strictly positive weights; normalization is a view, not a mutation."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 1:
            raise ValidationError(f"weights must be a nonempty vector, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("weights contain non-finite values")
        if not np.all(v > 0):
            raise ValidationError("weights must all be positive")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @property
    def normalized(self):
        return self.values / self.values.sum()


@dataclass(frozen=True)
class PointSequence:
    """Ordered samples on one manifold, optionally scoped to a ball."""

    manifold: Manifold
    values: np.ndarray
    ball: BallSpec = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        shape = self.manifold.point_shape
        if v.ndim != 1 + len(shape) or v.shape[1:] != shape:
            raise ValidationError(
                f"sequence must have shape (N, *{shape}), got {v.shape}"
            )
        if v.shape[0] < 1:
            raise ValidationError("sequence must contain at least one point")
        for p in v:
            self.manifold.check_point(p)
        if self.ball is not None:
            if self.ball.manifold is not self.manifold:
                raise ValidationError("ball and sequence manifolds differ")
            for p in v:
                if not self.ball.contains(p):
                    raise ValidationError("sequence point outside its declared ball")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.shape[0]


def _check_pair(seq, w):
    if len(seq) != len(w):
        raise ValidationError(
            f"{len(seq)} points but {len(w)} weights"
        )


def recursion_steps(weights):
    """Per-sample geodesic parameters w_n / sum_{j<=n} w_j."""
    weights = np.asarray(weights, dtype=np.float64)
    return weights / np.cumsum(weights)


def _ifme_values(manifold, values, tsteps):
    """Recursion core on raw arrays; no validation."""
    if isinstance(manifold, Spd) and manifold.metric == "affine_invariant":
        return kernels.spd_ifme(values, tsteps)
    cur = np.array(values[0])
    for i in range(1, values.shape[0]):
        cur = manifold.geodesic(cur, values[i], tsteps[i])
    return cur


def ifme_wfm(seq, w):
    """Run the geodesic recursion over the sequence with the given weights."""
    _check_pair(seq, w)
    return _ifme_values(seq.manifold, seq.values, recursion_steps(w.values))


def _descent_values(manifold, values, weights, step, tol, max_iter):
    """Descent core on raw arrays; raises ConvergenceError past max_iter."""
    if isinstance(manifold, Spd) and manifold.metric == "affine_invariant":
        out, resid, iters = kernels.spd_frechet_descent(
            values, weights, step, tol, max_iter
        )
    else:
        wn = np.asarray(weights, dtype=np.float64)
        out, resid, iters = _generic_descent(
            manifold, values, wn / wn.sum(), step, tol, max_iter
        )
    if not resid < tol:
        raise ConvergenceError(
            f"wfm_oracle: residual {resid:.3e} after {iters} iterations (tol {tol:g})",
            residual=resid,
            iterations=iters,
        )
    return out


def wfm_oracle(seq, w, step=ORACLE_STEP, tol=ORACLE_TOL, max_iter=ORACLE_MAX_ITER):
    """Weighted Fréchet mean by Riemannian gradient descent.

    Fixed-point iteration ``M <- exp_M(step * sum_i w~_i log_M(X_i))``
    starting at the first sample; the returned point satisfies
    ``||sum_i w~_i log_M(X_i)|| < tol`` in the tangent norm at M. Raises
    ConvergenceError after max_iter iterations without reaching tol.
    """
    _check_pair(seq, w)
    return _descent_values(seq.manifold, seq.values, w.values, step, tol, max_iter)


def _generic_descent(m, values, wn, step, tol, max_iter):
    cur = np.array(values[0])
    resid = np.inf
    for it in range(max_iter):
        grad = np.zeros(m.point_shape)
        for wi, x in zip(wn, values):
            grad += wi * m.log(cur, x)
        resid = float(np.linalg.norm(grad))
        if resid < tol:
            return cur, resid, it
        cur = m.exp(cur, step * grad)
    return cur, resid, max_iter


def consistency_curve(
    sampler,
    w_fn,
    sizes,
    n_seeds=20,
    base_seed=0,
    step=ORACLE_STEP,
    tol=ORACLE_TOL,
    max_iter=ORACLE_MAX_ITER,
    threads=None,
):
    """Median gap between the recursion and the descent oracle, per size.

    ``sampler(seed, n)`` must return a PointSequence of n i.i.d. draws in a
    valid ball and ``w_fn(n)`` a WeightVector. For each size the gap
    ``d(ifme_wfm, wfm_oracle)`` is computed over ``n_seeds`` independent
    draws (evaluated in parallel but reduced in seed order) and the median
    is reported. Returns ``[(n, median_gap), ...]``.
    """
    sizes = [int(n) for n in sizes]
    if any(n < 1 for n in sizes):
        raise ValidationError("sizes must be positive")
    if sorted(sizes) != sizes:
        raise ValidationError("sizes must be increasing")

    def gap(args):
        seed, n = args
        seq = sampler(seed, n)
        w = w_fn(n)
        est = ifme_wfm(seq, w)
        ref = wfm_oracle(seq, w, step=step, tol=tol, max_iter=max_iter)
        return seq.manifold.distance(est, ref)

    curve = []
    for n in sizes:
        jobs = [(base_seed + s, n) for s in range(n_seeds)]
        errs = ordered_map(gap, jobs, threads=threads)
        curve.append((n, float(np.median(errs))))
    return curve
