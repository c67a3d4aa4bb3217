"""Network building blocks around the weighted Fréchet mean.

A temporal wFM layer slides a window over manifold-valued sequences and
replaces each window by its recursive weighted mean; learnable raw
parameters are mapped through a sigmoid so the weights stay strictly inside
(0, 1), with a quadratic penalty pulling each output channel's weights
toward sum 1. Because every wFM commutes with the manifold's isometries,
stacks of these layers are equivariant; the final layer converts the
channel outputs into isometry-invariant features by measuring distances to
their unweighted mean.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationError
from .ifme import (
    ORACLE_MAX_ITER,
    ORACLE_STEP,
    ORACLE_TOL,
    PointSequence,
    WeightVector,
    _descent_values,
    _ifme_values,
    recursion_steps,
)
from .manifolds import Spd

PROB_FLOOR = 1e-12


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def inverse_sigmoid(w):
    w = np.asarray(w, dtype=np.float64)
    return np.log(w) - np.log1p(-w)


def weight_map(theta):
    """Map raw parameters to wFM weights: w = sigmoid(theta), in (0, 1)."""
    return sigmoid(theta)


def weight_penalty(theta, penalty_coeff):
    """Per output channel: penalty_coeff * (sum_i w_i - 1)^2, summed.

    1-D theta is treated as a single channel; 2-D theta has one channel
    per row.
    """
    if penalty_coeff < 0:
        raise ValidationError("penalty coefficient must be nonnegative")
    w = weight_map(np.atleast_2d(np.asarray(theta, dtype=np.float64)))
    return float(penalty_coeff * np.sum((w.sum(axis=1) - 1.0) ** 2))


@dataclass(frozen=True)
class WfmLayerParams:
    """Raw parameters of one temporal wFM layer.

    ``theta[o, :]`` holds the raw weights of output channel o, ordered
    channel-major/time-minor over the layer's (in_channel, window offset)
    slots.
    """

    theta: np.ndarray
    penalty_coeff: float = 1.0

    def __post_init__(self):
        t = np.asarray(self.theta, dtype=np.float64)
        if t.ndim != 2:
            raise ValidationError(f"theta must be 2-D (channels x slots), got {t.shape}")
        if not np.all(np.isfinite(t)):
            raise ValidationError("theta contains non-finite values")
        if self.penalty_coeff < 0:
            raise ValidationError("penalty coefficient must be nonnegative")
        object.__setattr__(self, "theta", t)

    @property
    def weights(self):
        return weight_map(self.theta)

    def penalty(self):
        return weight_penalty(self.theta, self.penalty_coeff)


@dataclass(frozen=True)
class TemporalWfmSpec:
    """Shape contract of one temporal wFM layer."""

    kernel: int
    stride: int
    in_channels: int
    out_channels: int

    def __post_init__(self):
        for name in ("kernel", "stride", "in_channels", "out_channels"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1, got {getattr(self, name)}")

    @property
    def slots(self):
        return self.in_channels * self.kernel

    def out_len(self, frames):
        if frames < self.kernel:
            raise ValidationError(
                f"window of {self.kernel} frames cannot slide over {frames}"
            )
        return (frames - self.kernel) // self.stride + 1


def covariance_descriptor(features, eps=1e-6):
    """Per-frame covariance of feature maps, regularized to be SPD.

    ``features`` has shape (frames, channels, locations). Each frame's rows
    are shifted to zero mean over locations and the C x C covariance
    (1/L) Xc Xc^T + eps I is returned as a (frames, C, C) stack.
    """
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 3:
        raise ValidationError(f"features must be (frames, C, L), got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValidationError("features contain non-finite values")
    if eps <= 0:
        raise ValidationError("eps must be positive")
    frames, c, loc = f.shape
    centered = f - f.mean(axis=2, keepdims=True)
    cov = np.einsum("fcl,fdl->fcd", centered, centered) / loc
    cov += eps * np.eye(c)
    return cov


def window_starts(frames, kernel, stride):
    return range(0, frames - kernel + 1, stride)


def _temporal_wfm_values(manifold, stacked, spec, theta):
    """Layer core on a raw (in_channels, frames, *point) stack.

    Returns an (out_channels, out_len, *point) array.
    """
    frames = stacked.shape[1]
    tsteps = np.stack([recursion_steps(w) for w in weight_map(theta)])
    out = [[] for _ in range(spec.out_channels)]
    for start in window_starts(frames, spec.kernel, spec.stride):
        window = stacked[:, start : start + spec.kernel]
        flat = np.ascontiguousarray(
            window.reshape((spec.slots,) + window.shape[2:])
        )
        for o in range(spec.out_channels):
            out[o].append(_ifme_values(manifold, flat, tsteps[o]))
    return np.stack([np.stack(ch) for ch in out])


def temporal_wfm_forward(seqs, spec, params):
    """Apply one temporal wFM layer to per-channel sequences.

    ``seqs`` is one PointSequence per input channel (same manifold, same
    length). For each output channel and each window of ``kernel``
    consecutive frames, the window's points across all input channels are
    fed to the recursion in channel-major/time-minor order with that
    channel's sigmoid-mapped weights. Returns one PointSequence per output
    channel of length floor((F - kernel)/stride) + 1.
    """
    if len(seqs) != spec.in_channels:
        raise ValidationError(
            f"expected {spec.in_channels} input sequences, got {len(seqs)}"
        )
    manifold = seqs[0].manifold
    frames = len(seqs[0])
    for s in seqs[1:]:
        if s.manifold is not manifold:
            raise ValidationError("input sequences live on different manifolds")
        if len(s) != frames:
            raise ValidationError("input sequences have different lengths")
    if params.theta.shape != (spec.out_channels, spec.slots):
        raise ValidationError(
            f"theta shape {params.theta.shape} does not match "
            f"(out_channels, in_channels*kernel) = ({spec.out_channels}, {spec.slots})"
        )
    spec.out_len(frames)  # validates frames >= kernel

    stacked = np.stack([s.values for s in seqs])  # (C, F, *point)
    out = _temporal_wfm_values(manifold, stacked, spec, params.theta)
    return [PointSequence(manifold, ch) for ch in out]


def _invariant_features(manifold, points, step, tol, max_iter):
    """Invariant-layer core on raw arrays; no validation."""
    d = points.shape[0]
    mean = _descent_values(
        manifold, points, np.full(d, 1.0 / d), step, tol, max_iter
    )
    if isinstance(manifold, Spd) and manifold.metric == "affine_invariant":
        return kernels.spd_distances_to(mean, points)
    return np.array([manifold.distance(mean, p) for p in points])


def invariant_final_layer(
    manifold,
    points,
    step=ORACLE_STEP,
    tol=ORACLE_TOL,
    max_iter=ORACLE_MAX_ITER,
):
    """Distances from the channels' unweighted Fréchet mean to each channel.

    The mean is computed with the descent oracle under uniform weights
    (order-independent up to the solver tolerance), so applying one
    isometry to every input leaves the output unchanged.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim < 1 or points.shape[0] < 1:
        raise ValidationError("invariant layer needs at least one point")
    PointSequence(manifold, points)  # validates every channel output
    return _invariant_features(manifold, points, step, tol, max_iter)


@dataclass(frozen=True)
class ClassifierHead:
    """Dense layer + softmax over invariant features."""

    W: np.ndarray  # (classes, features)
    b: np.ndarray  # (classes,)

    def __post_init__(self):
        w = np.asarray(self.W, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise ValidationError(
                f"head shapes inconsistent: W {w.shape}, b {b.shape}"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValidationError("head parameters contain non-finite values")
        object.__setattr__(self, "W", w)
        object.__setattr__(self, "b", b)

    @property
    def class_count(self):
        return self.W.shape[0]

    @property
    def feature_count(self):
        return self.W.shape[1]


def softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def fc_softmax(head, o):
    """Class probabilities softmax(W o + b); stable under large logits."""
    o = np.asarray(o, dtype=np.float64)
    if o.shape != (head.feature_count,):
        raise ValidationError(
            f"feature vector shape {o.shape} does not match head ({head.feature_count},)"
        )
    return softmax(head.W @ o + head.b)


def cross_entropy(probs, label):
    p = float(probs[label])
    return -float(np.log(max(p, PROB_FLOOR)))


def loss_total(probs, label, thetas, penalty_coeff):
    """Cross-entropy plus the per-channel weight penalties of every layer."""
    loss = cross_entropy(probs, label)
    for theta in thetas:
        loss += weight_penalty(theta, penalty_coeff)
    return loss


@dataclass(frozen=True)
class NonexpansiveReport:
    numerator: float
    denominator: float
    ratio: float


def nonexpansive_check(
    manifold,
    xs,
    ys,
    alphas,
    betas,
    step=ORACLE_STEP,
    tol=ORACLE_TOL,
    max_iter=ORACLE_MAX_ITER,
):
    """Ratio d(wFM(X, a), wFM(Y, b)) / max_ij d(X_i, Y_j).

    Both weight vectors must be nontrivial (after normalization no single
    weight may carry all the mass). When the sets coincide pointwise the
    denominator is ~0 and the ratio is reported as 0 by convention.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape[0] > ys.shape[0]:
        raise ValidationError("first set must not be larger than the second")
    alphas, betas = WeightVector(alphas), WeightVector(betas)
    for w in (alphas, betas):
        if np.max(w.normalized) >= 1.0 - 1e-9:
            raise ValidationError("trivial weights (one weight carries all mass)")
    wx = wfm_oracle(PointSequence(manifold, xs), alphas, step, tol, max_iter)
    wy = wfm_oracle(PointSequence(manifold, ys), betas, step, tol, max_iter)
    numerator = manifold.distance(wx, wy)
    denominator = max(
        manifold.distance(x, y) for x in xs for y in ys
    )
    ratio = 0.0 if denominator < 1e-12 else numerator / denominator
    return NonexpansiveReport(numerator, denominator, ratio)
