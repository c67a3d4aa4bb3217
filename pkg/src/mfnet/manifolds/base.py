"""Shared manifold machinery: tolerances, balls, isometries, base class.

Every operation here is a pure function of its inputs. Points are plain
float64 ndarrays; each manifold validates them through ``check_point`` at
public boundaries and hot paths work on the raw arrays.

The module-level tolerance constants are the documented defaults for double
precision at dimensions <= 16. They are read at call time, so tests or
callers with unusual conditioning can adjust them.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError

# Point-invariant tolerances.
SYM_ATOL = 1e-10            # symmetry residual allowed in an SPD point
SPD_EIG_MIN = 1e-12         # smallest eigenvalue an SPD point may have
ORTHO_ATOL = 1e-10          # |Q^T Q - I| allowed in orthonormal factors
UNIT_ATOL = 1e-12           # | ||v|| - 1 | allowed on the sphere
GRASSMANN_EQ_ATOL = 1e-8    # subspace distance treated as equality

# Isometry validity.
ROTATION_DET_ATOL = 1e-8    # |det R - 1| allowed in a rotation
MAX_CONDITION = 1e8         # condition-number cap for congruence elements

# Numerical hygiene.
EIG_CLAMP_FLOOR = 1e-10     # eigenvalue floor used by project()
ANTIPODAL_MARGIN = 1e-6     # sphere geodesics refuse distance >= pi - this


def as_matrix(x, shape, what):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != shape:
        raise ValidationError(f"{what}: expected shape {shape}, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError(f"{what}: non-finite entries")
    return x


def check_orthogonal(q, atol=None):
    """Validate Q^T Q = I; returns Q as float64."""
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValidationError(f"orthogonal matrix must be square, got {q.shape}")
    atol = ORTHO_ATOL if atol is None else atol
    resid = np.max(np.abs(q.T @ q - np.eye(q.shape[0])))
    if not resid <= atol:
        raise ValidationError(f"matrix is not orthogonal: |Q^T Q - I| = {resid:.3e}")
    return q


def random_orthogonal(n, rng, special=False):
    """Haar-ish orthogonal matrix via QR; special=True forces det +1."""
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    q = q * np.sign(np.diag(r))
    if special and np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


class Isometry(ABC):
    """A distance-preserving group element acting on one manifold."""

    @abstractmethod
    def apply(self, x):
        """Apply the group action to a raw point array."""


@dataclass(frozen=True)
class BallSpec:
    """A geodesic ball used to scope sampling and geodesic validity.

    The radius must stay below the manifold's documented validity bound
    (pi/2 on the sphere and the Grassmannian, unbounded on SPD with either
    supported metric and on Euclidean space).
    """

    manifold: "Manifold"
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", self.manifold.check_point(self.center))
        if not self.radius > 0:
            raise ValidationError(f"ball radius must be positive, got {self.radius}")
        bound = self.manifold.max_ball_radius
        if not self.radius < bound:
            raise ValidationError(
                f"ball radius {self.radius} violates the "
                f"{self.manifold.name} validity bound {bound}"
            )

    def contains(self, x, slack=1e-9):
        return self.manifold.distance(self.center, x) < self.radius + slack


class Manifold(ABC):
    """Base class: metric, geodesics, exp/log, isometries, sampling."""

    name = "manifold"
    #: largest admissible BallSpec radius (np.inf when unconstrained)
    max_ball_radius = np.inf

    @property
    @abstractmethod
    def point_shape(self):
        """Shape of a raw point array."""

    @abstractmethod
    def check_point(self, x):
        """Validate invariants; return the point as a float64 array."""

    @abstractmethod
    def distance(self, x, y):
        """Geodesic distance between two points."""

    @abstractmethod
    def log(self, p, q):
        """Tangent vector at p whose geodesic reaches q at time 1."""

    @abstractmethod
    def exp(self, p, v):
        """Geodesic shot from p along tangent vector v."""

    @abstractmethod
    def project(self, raw):
        """Map a raw array onto the manifold (numerical hygiene)."""

    @abstractmethod
    def random_tangent(self, p, norm, rng):
        """Random tangent vector at p with the given norm."""

    @abstractmethod
    def random_isometry(self, rng):
        """Random valid group element."""

    @abstractmethod
    def identity_isometry(self):
        """The group identity."""

    def geodesic(self, p, q, t):
        """Point at parameter t in [0, 1] on the geodesic from p to q."""
        if not 0.0 <= t <= 1.0:
            raise ValidationError(f"geodesic parameter t={t} outside [0, 1]")
        if t == 0.0:
            return np.array(p, dtype=np.float64)
        return self.exp(p, t * self.log(p, q))

    def check_tangent(self, p, v):
        v = as_matrix(v, self.point_shape, f"{self.name} tangent")
        return v

    def points_equal(self, x, y, atol=1e-8):
        return self.distance(x, y) <= atol

    def random_point_in_ball(self, ball, rng):
        """Draw a point with distance(center, .) < radius; rng-deterministic."""
        if ball.manifold is not self:
            raise ValidationError("ball belongs to a different manifold")
        rho = ball.radius * rng.uniform(0.0, 1.0)
        v = self.random_tangent(ball.center, rho, rng)
        return self.exp(ball.center, v)

    def __repr__(self):
        return f"{type(self).__name__}{self.point_shape}"


def act(g, x):
    """Apply isometry g to point x and re-validate the result."""
    y = g.apply(x)
    return g.manifold.check_point(y)


def dump_matrix_csv(path, mat):
    """Row-major CSV dump of a matrix, for debugging."""
    mat = np.atleast_2d(np.asarray(mat, dtype=np.float64))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in mat:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
