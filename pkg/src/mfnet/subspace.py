"""Grassmann averaging for dimensionality reduction.

A stream of centered vectors is consumed in disjoint blocks of k; each
block is orthonormalized into a subspace and folded into a running
intrinsic average with the geodesic recursion (uniform 1/n weights), which
converges to the k-dimensional principal subspace of the data. The same
averaging, with learnable per-block weights, powers a projection layer that
replaces a dense dimension-matching layer inside a small autoencoder.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EigenGapError, ValidationError
from .ifme import _ifme_values, recursion_steps
from .layers import inverse_sigmoid, weight_map, weight_penalty
from .manifolds import Grassmann
from .manifolds.grassmann import orthonormalize


@dataclass(frozen=True)
class SubspaceEstimate:
    """Snapshot of the streaming average."""

    basis: np.ndarray
    samples_seen: int
    blocks_used: int
    blocks_skipped: int


class StreamingSubspace:
    """Single-pass principal-subspace estimator (sequential state machine).

    Vectors must arrive centered; they are buffered into disjoint blocks of
    ``block_size`` samples, each block is reduced to the orthonormal basis
    of its top-k directions (for block_size == k this is plain
    orthonormalization of the k vectors), and the running estimate takes
    one geodesic step per block with uniform 1/n weights. Blocks of rank
    below k are skipped and counted.

    The default block size of 10*k trades a small delay for a much lower
    per-block dispersion; with raw k-vector blocks the averaged subspaces
    scatter so widely that the estimate converges an order of magnitude
    more slowly. Queries return immutable snapshots and are safe from other
    threads.
    """

    def __init__(self, ambient_dim, k, block_size=None, seed=0):
        if not 1 <= k <= ambient_dim:
            raise ValidationError(f"need 1 <= k <= n, got k={k}, n={ambient_dim}")
        self.manifold = Grassmann(ambient_dim, k)
        self.ambient_dim = int(ambient_dim)
        self.k = int(k)
        self.block_size = 10 * self.k if block_size is None else int(block_size)
        if self.block_size < self.k:
            raise ValidationError(
                f"block_size must be >= k, got {self.block_size} < {self.k}"
            )
        # the block scheme is deterministic; the seed is kept so callers can
        # thread one through uniformly, but no randomness is consumed
        self.seed = seed
        self._buffer = []
        self._basis = None
        self._seen = 0
        self._blocks = 0
        self._skipped = 0

    def _block_point(self, block):
        """Top-k orthonormal directions of a (m, n) block, or None if rank < k."""
        _, s, vt = np.linalg.svd(block, full_matrices=False)
        if s[self.k - 1] <= 1e-10 * max(s[0], 1.0):
            return None
        return np.ascontiguousarray(vt[: self.k].T)

    def push(self, vector):
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.ambient_dim,):
            raise ValidationError(
                f"vector shape {vector.shape} != ({self.ambient_dim},)"
            )
        if not np.all(np.isfinite(vector)):
            raise ValidationError("vector has non-finite entries")
        self._seen += 1
        self._buffer.append(vector)
        if len(self._buffer) < self.block_size:
            return
        block = np.stack(self._buffer)  # (m, n)
        self._buffer = []
        point = self._block_point(block)
        if point is None:
            self._skipped += 1
            return
        if self._basis is None:
            self._basis = point
        else:
            self._basis = self.manifold.geodesic(
                self._basis, point, 1.0 / (self._blocks + 1)
            )
        self._blocks += 1

    def push_many(self, vectors):
        for v in np.asarray(vectors, dtype=np.float64):
            self.push(v)

    @property
    def estimate(self):
        if self._basis is None:
            raise ValidationError(
                "no full-rank block consumed yet; stream more vectors"
            )
        return SubspaceEstimate(
            basis=self._basis.copy(),
            samples_seen=self._seen,
            blocks_used=self._blocks,
            blocks_skipped=self._skipped,
        )


def stream_principal_subspace(vectors, k, seed=0, block_size=None):
    """One-shot streaming estimate over an iterable of centered vectors."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2:
        raise ValidationError(f"vectors must be (N, n), got {vectors.shape}")
    stream = StreamingSubspace(vectors.shape[1], k, block_size=block_size, seed=seed)
    stream.push_many(vectors)
    return stream.estimate


def pca_oracle(vectors, k):
    """Top-k eigenvectors of the sample covariance, as an orthonormal basis.

    Raises EigenGapError when the spectrum gap at k is below 1e-10 and the
    principal subspace is not well defined.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < k:
        raise ValidationError(f"need at least k={k} vectors, got shape {x.shape}")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / x.shape[0]
    w, v = np.linalg.eigh(cov)
    w, v = w[::-1], v[:, ::-1]
    if k < x.shape[1] and w[k - 1] - w[k] < 1e-10:
        raise EigenGapError(
            f"eigen-gap {w[k-1] - w[k]:.3e} at k={k} makes the comparison ill-posed"
        )
    return v[:, :k]


def block_points(fc, k):
    """Orthonormalize disjoint consecutive blocks of k centered rows.

    Drops the row remainder. Returns (points, kept_mask); rank-deficient
    blocks are skipped and marked False in the mask.
    """
    n_blocks = fc.shape[0] // k
    points = []
    kept = np.zeros(n_blocks, dtype=bool)
    for i in range(n_blocks):
        block = fc[i * k : (i + 1) * k].T
        try:
            points.append(orthonormalize(block, "layer block"))
            kept[i] = True
        except ValidationError:
            pass
    return points, kept


def average_block_points(manifold, points, weights):
    """Geodesic recursion over prepared subspace points with given weights."""
    if not points:
        raise ValidationError("all blocks rank-deficient; no subspace available")
    tsteps = recursion_steps(np.asarray(weights, dtype=np.float64))
    return _ifme_values(manifold, np.stack(points), tsteps)


def _weighted_block_average(manifold, fc, k, theta):
    """Fold full-rank blocks with sigmoid weights; returns basis + skip count."""
    n_blocks = fc.shape[0] // k
    weights = weight_map(np.asarray(theta, dtype=np.float64))
    if weights.shape != (n_blocks,):
        raise ValidationError(
            f"theta must provide one raw weight per block ({n_blocks}), got {weights.shape}"
        )
    points, kept = block_points(fc, k)
    basis = average_block_points(manifold, points, weights[kept])
    return basis, int(np.sum(~kept))


class GrassmannAvgLayer:
    """Learnable weighted subspace averaging + projection.

    In train mode the layer re-estimates the row mean and the weighted
    average subspace from the batch; in eval mode it reuses the stored
    ones. ``theta`` holds one raw weight per block of k rows.
    """

    def __init__(self, k, n_blocks, theta=None):
        if k < 1 or n_blocks < 1:
            raise ValidationError("k and n_blocks must be >= 1")
        self.k = int(k)
        self.n_blocks = int(n_blocks)
        self.theta = (
            np.full(n_blocks, float(inverse_sigmoid(0.5)))
            if theta is None
            else np.asarray(theta, dtype=np.float64).copy()
        )
        if self.theta.shape != (self.n_blocks,):
            raise ValidationError(
                f"theta shape {self.theta.shape} != ({self.n_blocks},)"
            )
        self.mean_ = None
        self.basis_ = None
        self.skipped_blocks_ = 0

    def forward(self, feats, train=True):
        """Project (N, D) rows onto the averaged subspace; returns (N, k)."""
        feats = np.asarray(feats, dtype=np.float64)
        if feats.ndim != 2:
            raise ValidationError(f"expected (N, D) features, got {feats.shape}")
        n, dim = feats.shape
        if train:
            if n < self.k:
                raise ValidationError(f"need at least k={self.k} rows, got {n}")
            if n // self.k != self.n_blocks:
                raise ValidationError(
                    f"{n} rows form {n // self.k} blocks of {self.k}, "
                    f"but the layer holds {self.n_blocks} weights"
                )
            self.mean_ = feats.mean(axis=0)
            fc = feats - self.mean_
            manifold = Grassmann(dim, self.k)
            self.basis_, self.skipped_blocks_ = _weighted_block_average(
                manifold, fc, self.k, self.theta
            )
        else:
            if self.basis_ is None:
                raise ValidationError("layer has no stored subspace; run train mode first")
            fc = feats - self.mean_
        return fc @ self.basis_

    def penalty(self, penalty_coeff=1.0):
        return weight_penalty(self.theta, penalty_coeff)


def grassmann_avg_layer(feats, k, theta, train_mode=True, layer=None):
    """Functional wrapper: returns (projected rows, subspace basis).

    With ``layer`` given and train_mode False, reuses that layer's stored
    mean and basis instead of re-estimating from ``feats``.
    """
    if not train_mode:
        if layer is None:
            raise ValidationError("eval mode needs a fitted layer")
        return layer.forward(feats, train=False), layer.basis_
    feats = np.asarray(feats, dtype=np.float64)
    n_blocks = feats.shape[0] // max(int(k), 1)
    lyr = GrassmannAvgLayer(k, n_blocks, theta=theta)
    projected = lyr.forward(feats, train=True)
    return projected, lyr.basis_
