"""Symmetric positive-definite matrices.

Two metrics are supported:

* ``affine_invariant`` (default): d(a, b) = ||logm(a^{-1/2} b a^{-1/2})||_F.
  Nonpositive curvature, so Fréchet means exist and are unique globally and
  no ball-radius restriction applies. The isometry group acts by congruence
  x -> g x g^T with g any well-conditioned invertible matrix.
* ``log_euclidean``: d(a, b) = ||logm(a) - logm(b)||_F, the flat metric in
  matrix-log coordinates; tangent vectors are represented directly in those
  coordinates. Isometries are restricted to orthogonal congruence q x q^T.

Affine-invariant operations route through ``mfnet.kernels`` (compiled when
available); Log-Euclidean ones work in log coordinates with plain numpy.
"""

import numpy as np

from .. import kernels
from ..errors import ValidationError
from ..kernels.spd_numpy import _sqrt_factors, expm, logm
from . import base
from .base import Isometry, Manifold


class CongruenceIsometry(Isometry):
    """Acts on SPD matrices by x -> g x g^T."""

    def __init__(self, manifold, g):
        g = np.asarray(g, dtype=np.float64)
        n = manifold.dim
        if g.shape != (n, n):
            raise ValidationError(f"group element must be {n}x{n}, got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValidationError("group element has non-finite entries")
        if manifold.metric == "log_euclidean":
            base.check_orthogonal(g)
        else:
            cond = np.linalg.cond(g)
            if not cond < base.MAX_CONDITION:
                raise ValidationError(
                    f"congruence element condition number {cond:.3e} exceeds "
                    f"{base.MAX_CONDITION:.0e}"
                )
        self.manifold = manifold
        self.g = g

    def apply(self, x):
        return self.g @ np.asarray(x, dtype=np.float64) @ self.g.T


class Spd(Manifold):
    """The manifold of n x n symmetric positive-definite matrices."""

    METRICS = ("affine_invariant", "log_euclidean")
    max_ball_radius = np.inf

    def __init__(self, dim, metric="affine_invariant"):
        if dim < 1:
            raise ValidationError(f"SPD dimension must be >= 1, got {dim}")
        if metric not in self.METRICS:
            raise ValidationError(
                f"unknown SPD metric {metric!r}; pick from {self.METRICS}"
            )
        self.dim = int(dim)
        self.metric = metric
        self.name = f"spd({dim},{metric})"

    @property
    def point_shape(self):
        return (self.dim, self.dim)

    def check_point(self, x):
        x = base.as_matrix(x, self.point_shape, self.name)
        sym_resid = float(np.max(np.abs(x - x.T)))
        if not sym_resid <= base.SYM_ATOL:
            raise ValidationError(f"{self.name}: symmetry residual {sym_resid:.3e}")
        lo = np.linalg.eigvalsh(x)[0]
        if not lo > base.SPD_EIG_MIN:
            raise ValidationError(
                f"{self.name}: smallest eigenvalue {lo:.3e} not positive"
            )
        return x

    def check_tangent(self, p, v):
        v = base.as_matrix(v, self.point_shape, f"{self.name} tangent")
        resid = float(np.max(np.abs(v - v.T)))
        if not resid <= base.SYM_ATOL:
            raise ValidationError(f"{self.name}: tangent not symmetric ({resid:.3e})")
        return v

    def distance(self, x, y):
        if self.metric == "affine_invariant":
            return kernels.spd_distance(x, y)
        return float(np.linalg.norm(logm(x) - logm(y)))

    def geodesic(self, p, q, t):
        if not 0.0 <= t <= 1.0:
            raise ValidationError(f"geodesic parameter t={t} outside [0, 1]")
        if t == 0.0:
            return np.array(p, dtype=np.float64)
        if self.metric == "affine_invariant":
            return kernels.spd_geodesic(p, q, t)
        return expm((1.0 - t) * logm(p) + t * logm(q))

    def log(self, p, q):
        if self.metric == "affine_invariant":
            return kernels.spd_log(p, q)
        return logm(q) - logm(p)

    def exp(self, p, v):
        if self.metric == "affine_invariant":
            return kernels.spd_exp(p, v)
        return expm(logm(p) + v)

    def project(self, raw):
        """Symmetrize, then clamp eigenvalues to the documented floor."""
        raw = base.as_matrix(raw, self.point_shape, self.name)
        s = 0.5 * (raw + raw.T)
        w, v = np.linalg.eigh(s)
        return (v * np.maximum(w, base.EIG_CLAMP_FLOOR)) @ v.T

    def random_tangent(self, p, norm, rng):
        """Random tangent at p with metric norm ``norm``.

        Draws a symmetric direction in whitened (resp. log) coordinates,
        where the metric is plain Frobenius, and pushes it to p.
        """
        a = rng.normal(size=self.point_shape)
        w = 0.5 * (a + a.T)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            w, nw = np.eye(self.dim), np.sqrt(self.dim)
        w *= norm / nw
        if self.metric == "affine_invariant":
            sq, _ = _sqrt_factors(np.asarray(p, dtype=np.float64))
            return sq @ w @ sq
        return w

    def random_isometry(self, rng):
        n = self.dim
        if self.metric == "log_euclidean":
            return CongruenceIsometry(self, base.random_orthogonal(n, rng))
        # Well-conditioned invertible element: q1 diag(e^u) q2^T, u small.
        q1 = base.random_orthogonal(n, rng)
        q2 = base.random_orthogonal(n, rng)
        u = rng.uniform(-0.5, 0.5, size=n)
        return CongruenceIsometry(self, (q1 * np.exp(u)) @ q2.T)

    def identity_isometry(self):
        return CongruenceIsometry(self, np.eye(self.dim))
