"""The Grassmannian Gr(k, n): k-dimensional subspaces of R^n.

Points are n x k matrices with orthonormal columns; two bases denote the
same point when they span the same subspace, so equality means subspace
distance zero and every operation is invariant to right multiplication of
its inputs by k x k orthogonal matrices.

Geodesics, exp and log use the thin-SVD construction of the tangent
representative. Principal angles are computed from the cosine SVD for large
angles and the sine SVD for small ones, which keeps distances accurate at
both ends of the range. Ball validity requires the largest principal angle
to stay below pi/2 (enforced via radius < pi/2, since the angle vector's
l2 norm bounds its largest entry).
"""

import numpy as np

from ..errors import ValidationError
from . import base
from .base import Isometry, Manifold


class LeftMultiplicationIsometry(Isometry):
    """Acts on subspace bases by x -> Q x with Q orthogonal on R^n."""

    def __init__(self, manifold, q):
        q = base.check_orthogonal(q)
        if q.shape != (manifold.ambient_dim,) * 2:
            raise ValidationError(
                f"group element must be {manifold.ambient_dim}x{manifold.ambient_dim}"
            )
        self.manifold = manifold
        self.q = q

    def apply(self, x):
        return self.q @ np.asarray(x, dtype=np.float64)


def orthonormalize(raw, what="grassmann basis"):
    """Span-preserving orthonormalization (QR with positive diagonal).

    Identity (to rounding) on already-orthonormal input. Raises on
    rank-deficient input.
    """
    raw = np.asarray(raw, dtype=np.float64)
    sv = np.linalg.svd(raw, compute_uv=False)
    if sv[-1] <= 1e-10 * max(sv[0], 1.0):
        raise ValidationError(f"{what}: rank-deficient (smallest sv {sv[-1]:.3e})")
    q, r = np.linalg.qr(raw)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


class Grassmann(Manifold):
    """Subspace manifold Gr(k, n) with the principal-angle metric."""

    max_ball_radius = np.pi / 2

    def __init__(self, ambient_dim, sub_dim):
        if not 1 <= sub_dim <= ambient_dim:
            raise ValidationError(
                f"need 1 <= k <= n, got k={sub_dim}, n={ambient_dim}"
            )
        self.ambient_dim = int(ambient_dim)
        self.sub_dim = int(sub_dim)
        self.name = f"grassmann({sub_dim},{ambient_dim})"

    @property
    def point_shape(self):
        return (self.ambient_dim, self.sub_dim)

    def check_point(self, x):
        x = base.as_matrix(x, self.point_shape, self.name)
        resid = float(np.max(np.abs(x.T @ x - np.eye(self.sub_dim))))
        if not resid <= base.ORTHO_ATOL:
            raise ValidationError(
                f"{self.name}: basis not orthonormal (|X^T X - I| = {resid:.3e})"
            )
        return x

    def check_tangent(self, p, v):
        v = base.as_matrix(v, self.point_shape, f"{self.name} tangent")
        resid = float(np.max(np.abs(np.asarray(p).T @ v)))
        if not resid <= 1e-8:
            raise ValidationError(
                f"{self.name}: tangent not horizontal (|X^T V| = {resid:.3e})"
            )
        return v

    def principal_angles(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        m = x.T @ y
        s_cos = np.linalg.svd(m, compute_uv=False)
        s_sin = np.linalg.svd(y - x @ m, compute_uv=False)
        th_cos = np.arccos(np.clip(s_cos, -1.0, 1.0))        # ascending
        th_sin = np.arcsin(np.clip(s_sin, 0.0, 1.0))[::-1]   # ascending
        return np.where(s_cos**2 >= 0.5, th_sin, th_cos)

    def distance(self, x, y):
        return float(np.linalg.norm(self.principal_angles(x, y)))

    def points_equal(self, x, y, atol=None):
        atol = base.GRASSMANN_EQ_ATOL if atol is None else atol
        return self.distance(x, y) <= atol

    def log(self, p, q):
        p = np.asarray(p, dtype=np.float64)
        q = np.asarray(q, dtype=np.float64)
        m = p.T @ q
        sv = np.linalg.svd(m, compute_uv=False)
        if sv[-1] <= 1e-8:
            raise ValidationError(
                f"{self.name}: log undefined, largest principal angle ~ pi/2"
            )
        g = np.linalg.solve(m.T, (q - p @ m).T).T
        u, s, vt = np.linalg.svd(g, full_matrices=False)
        return (u * np.arctan(s)) @ vt

    def exp(self, p, v):
        p = np.asarray(p, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        u, s, vt = np.linalg.svd(v, full_matrices=False)
        y = (p @ vt.T * np.cos(s)) @ vt + (u * np.sin(s)) @ vt
        return orthonormalize(y, f"{self.name} exp output")

    def project(self, raw):
        return orthonormalize(
            base.as_matrix(raw, self.point_shape, self.name), self.name
        )

    def random_tangent(self, p, norm, rng):
        p = np.asarray(p, dtype=np.float64)
        g = rng.normal(size=self.point_shape)
        h = g - p @ (p.T @ g)
        nh = np.linalg.norm(h)
        if nh < 1e-12:
            return self.random_tangent(p, norm, rng)
        return (norm / nh) * h

    def random_isometry(self, rng):
        return LeftMultiplicationIsometry(
            self, base.random_orthogonal(self.ambient_dim, rng)
        )

    def identity_isometry(self):
        return LeftMultiplicationIsometry(self, np.eye(self.ambient_dim))
