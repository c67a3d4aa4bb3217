"""The unit sphere S^{n-1} embedded in R^n."""

import numpy as np

from ..errors import ValidationError
from . import base
from .base import Isometry, Manifold


class RotationIsometry(Isometry):
    """Acts on unit vectors by x -> R x with R special orthogonal."""

    def __init__(self, manifold, r):
        r = base.check_orthogonal(r)
        if r.shape != (manifold.ambient_dim,) * 2:
            raise ValidationError(
                f"rotation must be {manifold.ambient_dim}x{manifold.ambient_dim}"
            )
        det = np.linalg.det(r)
        if not abs(det - 1.0) <= base.ROTATION_DET_ATOL:
            raise ValidationError(f"rotation determinant {det} != +1")
        self.manifold = manifold
        self.r = r

    def apply(self, x):
        return self.r @ np.asarray(x, dtype=np.float64)


class Sphere(Manifold):
    """Unit vectors in R^n with the arc-length metric.

    The documented ball-validity bound is pi/2 (unit curvature bound), and
    geodesic construction refuses near-antipodal pairs.
    """

    max_ball_radius = np.pi / 2

    def __init__(self, ambient_dim):
        if ambient_dim < 2:
            raise ValidationError(f"sphere needs ambient dim >= 2, got {ambient_dim}")
        self.ambient_dim = int(ambient_dim)
        self.name = f"sphere(R^{ambient_dim})"

    @property
    def point_shape(self):
        return (self.ambient_dim,)

    def check_point(self, x):
        x = base.as_matrix(x, self.point_shape, self.name)
        resid = abs(np.linalg.norm(x) - 1.0)
        if not resid <= base.UNIT_ATOL:
            raise ValidationError(f"{self.name}: |norm - 1| = {resid:.3e}")
        return x

    def check_tangent(self, p, v):
        v = base.as_matrix(v, self.point_shape, f"{self.name} tangent")
        dot = abs(float(np.dot(p, v)))
        if not dot <= 1e-8:
            raise ValidationError(f"{self.name}: tangent not orthogonal to base point ({dot:.3e})")
        return v

    def distance(self, x, y):
        # Equals arccos of the clamped inner product, computed through
        # atan2 so tiny and near-pi angles stay accurate.
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        c = float(np.dot(x, y))
        s = float(np.linalg.norm(y - c * x))
        return float(np.arctan2(s, c))

    def log(self, p, q):
        p = np.asarray(p, dtype=np.float64)
        q = np.asarray(q, dtype=np.float64)
        c = float(np.dot(p, q))
        u = q - c * p
        nu = float(np.linalg.norm(u))
        theta = float(np.arctan2(nu, c))
        if nu < 1e-300:
            return np.zeros_like(p)
        return (theta / nu) * u

    def exp(self, p, v):
        p = np.asarray(p, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        theta = float(np.linalg.norm(v))
        if theta == 0.0:
            return np.array(p)
        out = np.cos(theta) * p + (np.sin(theta) / theta) * v
        return out / np.linalg.norm(out)

    def geodesic(self, p, q, t):
        if not 0.0 <= t <= 1.0:
            raise ValidationError(f"geodesic parameter t={t} outside [0, 1]")
        d = self.distance(p, q)
        if d >= np.pi - base.ANTIPODAL_MARGIN:
            raise ValidationError(
                f"{self.name}: geodesic undefined for near-antipodal points (d={d:.6f})"
            )
        if t == 0.0:
            return np.array(p, dtype=np.float64)
        return self.exp(p, t * self.log(p, q))

    def project(self, raw):
        raw = base.as_matrix(raw, self.point_shape, self.name)
        n = np.linalg.norm(raw)
        if n < 1e-12:
            raise ValidationError(f"{self.name}: cannot project the zero vector")
        return raw / n

    def random_tangent(self, p, norm, rng):
        p = np.asarray(p, dtype=np.float64)
        g = rng.normal(size=self.point_shape)
        u = g - np.dot(p, g) * p
        nu = np.linalg.norm(u)
        if nu < 1e-12:
            # pathological draw; retry deterministically from the stream
            return self.random_tangent(p, norm, rng)
        return (norm / nu) * u

    def random_isometry(self, rng):
        return RotationIsometry(
            self, base.random_orthogonal(self.ambient_dim, rng, special=True)
        )

    def identity_isometry(self):
        return RotationIsometry(self, np.eye(self.ambient_dim))
