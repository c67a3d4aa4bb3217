"""Flat R^n, the oracle manifold where every operation has a closed form."""

import numpy as np

from ..errors import ValidationError
from . import base
from .base import Isometry, Manifold


class RigidMotionIsometry(Isometry):
    """Acts on vectors by x -> R x + t."""

    def __init__(self, manifold, r, t):
        r = base.check_orthogonal(r)
        n = manifold.dim
        if r.shape != (n, n):
            raise ValidationError(f"rotation must be {n}x{n}, got {r.shape}")
        det = np.linalg.det(r)
        if not abs(det - 1.0) <= base.ROTATION_DET_ATOL:
            raise ValidationError(f"rotation determinant {det} != +1")
        self.manifold = manifold
        self.r = r
        self.t = base.as_matrix(t, (n,), "translation")

    def apply(self, x):
        return self.r @ np.asarray(x, dtype=np.float64) + self.t


class Euclidean(Manifold):
    """R^n with the usual metric."""

    max_ball_radius = np.inf

    def __init__(self, dim):
        if dim < 1:
            raise ValidationError(f"dimension must be >= 1, got {dim}")
        self.dim = int(dim)
        self.name = f"euclidean(R^{dim})"

    @property
    def point_shape(self):
        return (self.dim,)

    def check_point(self, x):
        return base.as_matrix(x, self.point_shape, self.name)

    def distance(self, x, y):
        return float(np.linalg.norm(np.asarray(y, dtype=np.float64) - x))

    def log(self, p, q):
        return np.asarray(q, dtype=np.float64) - p

    def exp(self, p, v):
        return np.asarray(p, dtype=np.float64) + v

    def geodesic(self, p, q, t):
        if not 0.0 <= t <= 1.0:
            raise ValidationError(f"geodesic parameter t={t} outside [0, 1]")
        p = np.asarray(p, dtype=np.float64)
        q = np.asarray(q, dtype=np.float64)
        return (1.0 - t) * p + t * q

    def project(self, raw):
        return base.as_matrix(raw, self.point_shape, self.name)

    def random_tangent(self, p, norm, rng):
        g = rng.normal(size=self.point_shape)
        ng = np.linalg.norm(g)
        if ng < 1e-12:
            return self.random_tangent(p, norm, rng)
        return (norm / ng) * g

    def random_isometry(self, rng):
        r = base.random_orthogonal(self.dim, rng, special=True)
        t = rng.normal(size=self.dim)
        return RigidMotionIsometry(self, r, t)

    def identity_isometry(self):
        return RigidMotionIsometry(self, np.eye(self.dim), np.zeros(self.dim))
