"""Riemannian manifolds with distances, geodesics, isometries and sampling."""

from .base import (
    BallSpec,
    Isometry,
    Manifold,
    act,
    dump_matrix_csv,
    random_orthogonal,
)
from .euclidean import Euclidean, RigidMotionIsometry
from .grassmann import Grassmann, LeftMultiplicationIsometry, orthonormalize
from .spd import CongruenceIsometry, Spd
from .sphere import RotationIsometry, Sphere

__all__ = [
    "BallSpec",
    "CongruenceIsometry",
    "Euclidean",
    "Grassmann",
    "Isometry",
    "LeftMultiplicationIsometry",
    "Manifold",
    "RigidMotionIsometry",
    "RotationIsometry",
    "Spd",
    "Sphere",
    "act",
    "dump_matrix_csv",
    "orthonormalize",
    "random_orthogonal",
]
