"""Training for the temporal wFM classifier.

The parameter counts here are tiny (hundreds), so gradients for the
manifold-layer raw weights come from central finite differences on the full
loss, while the dense head is trained with its analytic softmax/cross-entropy
gradient. Both are updated by SGD with momentum. Every step is a pure
function of (parameters, data, seed): coordinate evaluations may run in
parallel (capped by ``MFNET_THREADS``) but are assembled in coordinate
order, so results are bit-stable.
"""

import time
from dataclasses import dataclass, replace

import numpy as np

from ._parallel import ordered_map
from .errors import NumericalError, ValidationError
from .layers import (
    ClassifierHead,
    TemporalWfmSpec,
    _invariant_features,
    _temporal_wfm_values,
    cross_entropy,
    fc_softmax,
    inverse_sigmoid,
    softmax,
    weight_map,
    weight_penalty,
)
from .ifme import ORACLE_MAX_ITER, ORACLE_STEP, ORACLE_TOL
from .metrics import MetricsRecord


def finite_diff_grad(scalar_fn, params, h=1e-5, threads=None):
    """Central-difference gradient of a deterministic scalar function.

    grad_i = (f(p + h e_i) - f(p - h e_i)) / (2 h); coordinates are
    independent and may be evaluated in parallel.
    """
    params = np.asarray(params, dtype=np.float64)
    if not h > 0:
        raise ValidationError(f"finite-difference step must be positive, got {h}")

    def one(i):
        up = params.copy()
        up[i] += h
        down = params.copy()
        down[i] -= h
        return (scalar_fn(up) - scalar_fn(down)) / (2.0 * h)

    grad = np.array(ordered_map(one, range(params.size), threads=threads))
    if not np.all(np.isfinite(grad)):
        bad = int(np.flatnonzero(~np.isfinite(grad))[0])
        raise NumericalError(f"non-finite finite-difference evaluation at coordinate {bad}")
    return grad


class SgdMomentum:
    """Classic SGD with momentum; velocity is keyed per parameter array."""

    def __init__(self, lr, momentum=0.9):
        self.lr = lr
        self.momentum = momentum
        self._velocity = {}

    def step(self, key, params, grad):
        v = self._velocity.get(key)
        v = -self.lr * grad if v is None else self.momentum * v - self.lr * grad
        self._velocity[key] = v
        return params + v


class Adam:
    """Adam with bias correction; moments are keyed per parameter array."""

    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m = {}
        self._v = {}
        self._t = {}

    def step(self, key, params, grad):
        t = self._t.get(key, 0) + 1
        m = self.beta1 * self._m.get(key, 0.0) + (1 - self.beta1) * grad
        v = self.beta2 * self._v.get(key, 0.0) + (1 - self.beta2) * grad * grad
        self._t[key], self._m[key], self._v[key] = t, m, v
        mhat = m / (1 - self.beta1**t)
        vhat = v / (1 - self.beta2**t)
        return params - self.lr * mhat / (np.sqrt(vhat) + self.eps)


@dataclass(frozen=True)
class TcnSpec:
    """Architecture of the temporal classifier: wFM stack + invariant head.

    The first layer must take one input channel and each layer's input
    channel count must match the previous layer's output count.
    """

    manifold: object
    layers: tuple
    n_classes: int
    penalty_coeff: float = 1.0

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValidationError("need at least one temporal layer")
        for lay in layers:
            if not isinstance(lay, TemporalWfmSpec):
                raise ValidationError("layers must be TemporalWfmSpec instances")
        if layers[0].in_channels != 1:
            raise ValidationError("first layer must take 1 input channel")
        for prev, nxt in zip(layers, layers[1:]):
            if nxt.in_channels != prev.out_channels:
                raise ValidationError(
                    f"channel mismatch: {prev.out_channels} -> {nxt.in_channels}"
                )
        if self.n_classes < 2:
            raise ValidationError("need at least two classes")
        object.__setattr__(self, "layers", layers)

    def frame_chain(self, frames):
        """Sequence length after each layer; raises if any window misfits."""
        chain = []
        for lay in self.layers:
            frames = lay.out_len(frames)
            chain.append(frames)
        return chain

    def feature_count(self, frames):
        return self.layers[-1].out_channels * self.frame_chain(frames)[-1]

    def parameter_count(self, frames):
        d = self.feature_count(frames)
        n_theta = sum(lay.out_channels * lay.slots for lay in self.layers)
        return n_theta + self.n_classes * d + self.n_classes


@dataclass(frozen=True)
class TcnModel:
    """Parameter bundle for a TcnSpec; forward passes are pure."""

    spec: TcnSpec
    thetas: tuple
    head: ClassifierHead
    oracle_step: float = ORACLE_STEP
    oracle_tol: float = ORACLE_TOL
    oracle_max_iter: int = ORACLE_MAX_ITER

    def forward_features(self, x):
        """Invariant feature vector o for one (frames, n, n) sequence."""
        return _forward_features(
            self.spec,
            self.thetas,
            np.asarray(x, dtype=np.float64),
            self.oracle_step,
            self.oracle_tol,
            self.oracle_max_iter,
        )

    def predict_proba(self, x):
        return fc_softmax(self.head, self.forward_features(x))

    def flat_theta(self):
        return np.concatenate([t.ravel() for t in self.thetas])

    def with_flat_theta(self, flat):
        return replace(self, thetas=_unflatten(self.spec, flat))

    def penalty(self):
        return sum(
            weight_penalty(t, self.spec.penalty_coeff) for t in self.thetas
        )

    def parameter_count(self):
        return sum(t.size for t in self.thetas) + self.head.W.size + self.head.b.size


def _unflatten(spec, flat):
    thetas = []
    pos = 0
    for lay in spec.layers:
        size = lay.out_channels * lay.slots
        thetas.append(flat[pos : pos + size].reshape(lay.out_channels, lay.slots))
        pos += size
    if pos != flat.size:
        raise ValidationError(f"theta vector has {flat.size} entries, expected {pos}")
    return tuple(thetas)


def _forward_features(spec, thetas, x, step, tol, max_iter):
    stacked = x[None]  # one input channel
    for lay, theta in zip(spec.layers, thetas):
        stacked = _temporal_wfm_values(spec.manifold, stacked, lay, theta)
    # channel-major, frame-minor flattening into the invariant layer
    points = stacked.reshape((-1,) + stacked.shape[2:])
    return _invariant_features(spec.manifold, points, step, tol, max_iter)


def _head_loss_grad(head, feats, labels):
    logits = feats @ head.W.T + head.b
    probs = softmax(logits)
    onehot = np.zeros_like(probs)
    onehot[np.arange(labels.size), labels] = 1.0
    delta = (probs - onehot) / labels.size
    grad_w = delta.T @ feats
    grad_b = delta.sum(axis=0)
    loss = float(
        -np.mean(np.log(np.maximum(probs[np.arange(labels.size), labels], 1e-12)))
    )
    return loss, grad_w, grad_b


def _accuracy(head, feats, labels):
    logits = feats @ head.W.T + head.b
    return float(np.mean(np.argmax(logits, axis=1) == labels))


@dataclass(frozen=True)
class TrainConfig:
    """Training-loop knobs; defaults target the <=1.5k-parameter regime."""

    epochs: int = 2
    lr: float = 0.05
    momentum: float = 0.9
    head_lr: float = 0.5
    head_steps: int = 400
    theta_steps: int = 1
    theta_batch: int = 4
    fd_step: float = 1e-5
    theta_jitter: float = 2.0


def init_thetas(spec, seed, theta_jitter=2.0):
    """Deterministic init: diverse weight profiles, each summing to 1.

    Deep wFM stacks are non-expansive, so with near-identical channels the
    invariant features collapse toward zero; heavy jitter keeps the initial
    channels genuinely different temporal profiles. Because the recursion
    only sees weight ratios, each channel's weights can then be rescaled to
    sum to 1 (a proper wFM, zero initial penalty) without changing any
    forward pass.
    """
    rng = np.random.default_rng(seed)
    thetas = []
    for lay in spec.layers:
        center = float(inverse_sigmoid(1.0 / lay.slots))
        raw = rng.normal(center, theta_jitter, size=(lay.out_channels, lay.slots))
        w = weight_map(raw)
        w = w / w.sum(axis=1, keepdims=True)
        thetas.append(inverse_sigmoid(np.clip(w, 1e-12, 1.0 - 1e-12)))
    return thetas


def _fit_head(feats, labels, head, lr, momentum, steps):
    """Head SGD in feature-standardized coordinates.

    Invariant features can sit at very small scales, which conditions the
    plain logistic-regression problem badly. Training runs on standardized
    features and the affine scaler is folded back into (W, b) afterwards,
    so the returned head is still an exact FC+softmax over raw features.
    """
    mu = feats.mean(axis=0)
    sd = feats.std(axis=0) + 1e-12
    fs = (feats - mu) / sd
    # transform the incoming head into scaled coordinates
    w = head.W * sd
    b = head.b + head.W @ mu
    opt = SgdMomentum(lr, momentum)
    for _ in range(steps):
        _, gw, gb = _head_loss_grad(ClassifierHead(w, b), fs, labels)
        w = opt.step("W", w, gw)
        b = opt.step("b", b, gb)
    return ClassifierHead(w / sd, b - (w / sd) @ mu)


def train_classifier(
    spec,
    train,
    test,
    config=TrainConfig(),
    seed=0,
    experiment_id="spd-seq-classify",
):
    """Train the temporal wFM classifier; returns (model, metrics records).

    ``train``/``test`` are (sequences, labels) pairs with sequences shaped
    (count, frames, n, n). Layer raw weights move by finite-difference SGD
    steps on minibatches; the head runs analytic full-batch steps on the
    current features. Metrics rows (loss, train/test accuracy) are recorded
    per epoch, starting with an untrained epoch-0 row; identical
    (config, seed) reruns produce identical rows apart from wall_s.
    """
    x_train, y_train = train
    x_test, y_test = test
    x_train = np.asarray(x_train, dtype=np.float64)
    x_test = np.asarray(x_test, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.int64)
    y_test = np.asarray(y_test, dtype=np.int64)
    if x_train.shape[0] == 0:
        raise ValidationError("training set is empty")
    frames = x_train.shape[1]
    d = spec.feature_count(frames)

    rng = np.random.default_rng(seed)
    thetas = tuple(init_thetas(spec, rng.integers(2**32), config.theta_jitter))
    head = ClassifierHead(np.zeros((spec.n_classes, d)), np.zeros(spec.n_classes))
    model = TcnModel(spec=spec, thetas=thetas, head=head)
    opt = SgdMomentum(config.lr, config.momentum)

    t0 = time.perf_counter()
    records = []

    def features(xs):
        return np.stack([model.forward_features(x) for x in xs]) if len(xs) else np.zeros((0, d))

    def snapshot(epoch, feats_train, feats_test):
        wall = time.perf_counter() - t0
        ce, _, _ = _head_loss_grad(model.head, feats_train, y_train)
        loss = ce + model.penalty()
        if not np.isfinite(loss):
            raise NumericalError(f"training diverged (non-finite loss) at epoch {epoch}")
        rows = [
            ("loss", loss),
            ("train_accuracy", _accuracy(model.head, feats_train, y_train)),
        ]
        if y_test.size:
            rows.append(("test_accuracy", _accuracy(model.head, feats_test, y_test)))
        for name, value in rows:
            records.append(
                MetricsRecord(experiment_id, seed, epoch, name, float(value), wall)
            )

    feats_train = features(x_train)
    feats_test = features(x_test)
    snapshot(0, feats_train, feats_test)

    for epoch in range(1, config.epochs + 1):
        for _ in range(config.theta_steps):
            batch = rng.choice(
                x_train.shape[0],
                size=min(config.theta_batch, x_train.shape[0]),
                replace=False,
            )
            xb, yb = x_train[batch], y_train[batch]
            head_now = model.head

            def fd_loss(flat):
                cand = model.with_flat_theta(flat)
                ce = np.mean(
                    [
                        cross_entropy(fc_softmax(head_now, cand.forward_features(x)), y)
                        for x, y in zip(xb, yb)
                    ]
                )
                return float(ce + cand.penalty())

            grad = finite_diff_grad(fd_loss, model.flat_theta(), h=config.fd_step)
            model = model.with_flat_theta(opt.step("theta", model.flat_theta(), grad))

        feats_train = features(x_train)
        feats_test = features(x_test)
        new_head = _fit_head(
            feats_train,
            y_train,
            model.head,
            config.head_lr,
            config.momentum,
            config.head_steps,
        )
        model = replace(model, head=new_head)
        snapshot(epoch, feats_train, feats_test)

    return model, records
