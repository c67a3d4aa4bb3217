"""Small dense autoencoders with a subspace-averaging bottleneck.

The reduction path is encoder (affine + tanh) -> Grassmann averaging layer
(center, project onto the learned weighted-average subspace) -> decoder
(affine + sigmoid). The baseline variant swaps the averaging layer for a
bias-free dense map of the same latent width, which makes the parameter
difference exactly hidden_dim*latent_k - n_blocks.

Dense parameters train with analytic gradients (the projection basis and
batch mean are treated as constants there); the averaging layer's raw
weights move by occasional finite-difference steps, which do see the basis'
dependence on the weights.
"""

import time
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .layers import inverse_sigmoid, sigmoid, weight_map
from .manifolds import Grassmann
from .metrics import MetricsRecord
from .subspace import (
    GrassmannAvgLayer,
    average_block_points,
    block_points,
    pca_oracle,
)
from .training import Adam, SgdMomentum, finite_diff_grad


@dataclass(frozen=True)
class AutoencoderSpec:
    """One dense encoder layer, one dense decoder layer, latent width k."""

    input_dim: int
    hidden_dim: int
    latent_k: int
    w_enc: np.ndarray  # (hidden, input)
    b_enc: np.ndarray  # (hidden,)
    w_dec: np.ndarray  # (input, latent)
    b_dec: np.ndarray  # (input,)

    def __post_init__(self):
        if not 1 <= self.latent_k <= self.hidden_dim:
            raise ValidationError(
                f"need 1 <= latent_k <= hidden_dim, got {self.latent_k} > {self.hidden_dim}"
            )
        shapes = {
            "w_enc": (self.hidden_dim, self.input_dim),
            "b_enc": (self.hidden_dim,),
            "w_dec": (self.input_dim, self.latent_k),
            "b_dec": (self.input_dim,),
        }
        for name, shape in shapes.items():
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ValidationError(f"{name}: expected {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name}: non-finite entries")
            object.__setattr__(self, name, arr)


def init_autoencoder(input_dim, hidden_dim, latent_k, seed):
    rng = np.random.default_rng(seed)
    return AutoencoderSpec(
        input_dim=input_dim,
        hidden_dim=hidden_dim,
        latent_k=latent_k,
        w_enc=rng.normal(0.0, 1.0 / np.sqrt(input_dim), (hidden_dim, input_dim)),
        b_enc=np.zeros(hidden_dim),
        w_dec=rng.normal(0.0, 1.0 / np.sqrt(latent_k), (input_dim, latent_k)),
        b_dec=np.zeros(input_dim),
    )


class GrassmannAutoencoder:
    """Autoencoder whose bottleneck projects onto an averaged subspace."""

    def __init__(self, spec, n_blocks, theta=None):
        self.spec = spec
        k = spec.latent_k
        if theta is None:
            # uniform proper weights: each block weight 1/n_blocks
            theta = np.full(n_blocks, float(inverse_sigmoid(1.0 / max(n_blocks, 2))))
        self.layer = GrassmannAvgLayer(k, n_blocks, theta=theta)

    def hidden(self, x):
        return np.tanh(x @ self.spec.w_enc.T + self.spec.b_enc)

    def latent(self, x, train=False):
        return self.layer.forward(self.hidden(x), train=train)

    def decode(self, latent):
        return sigmoid(latent @ self.spec.w_dec.T + self.spec.b_dec)

    def reconstruct(self, x, train=False):
        return self.decode(self.latent(x, train=train))

    def mse(self, x, train=False):
        recon = self.reconstruct(x, train=train)
        return float(np.mean((recon - x) ** 2))

    def parameter_count(self):
        s = self.spec
        dense = s.w_enc.size + s.b_enc.size + s.w_dec.size + s.b_dec.size
        return dense + self.layer.theta.size


class DenseAutoencoder:
    """Baseline: same encoder/decoder, bias-free dense bottleneck."""

    def __init__(self, spec, seed):
        self.spec = spec
        rng = np.random.default_rng(seed)
        self.w_mid = rng.normal(
            0.0, 1.0 / np.sqrt(spec.hidden_dim), (spec.latent_k, spec.hidden_dim)
        )
        self.mean_ = np.zeros(spec.hidden_dim)

    def hidden(self, x):
        return np.tanh(x @ self.spec.w_enc.T + self.spec.b_enc)

    def latent(self, x, train=False):
        h = self.hidden(x)
        if train:
            self.mean_ = h.mean(axis=0)
        return (h - self.mean_) @ self.w_mid.T

    def decode(self, latent):
        return sigmoid(latent @ self.spec.w_dec.T + self.spec.b_dec)

    def reconstruct(self, x, train=False):
        return self.decode(self.latent(x, train=train))

    def mse(self, x, train=False):
        return float(np.mean((self.reconstruct(x, train=train) - x) ** 2))

    def parameter_count(self):
        s = self.spec
        dense = s.w_enc.size + s.b_enc.size + s.w_dec.size + s.b_dec.size
        return dense + self.w_mid.size


def bottleneck_param_delta(spec, n_blocks):
    """Parameter-count change when the averaging layer replaces the dense
    bottleneck: hidden_dim * latent_k - n_blocks."""
    return spec.hidden_dim * spec.latent_k - n_blocks


@dataclass(frozen=True)
class AeTrainConfig:
    optimizer: str = "adam"     # "adam" | "sgd" for the dense parameters
    lr: float = 0.01
    momentum: float = 0.9
    theta_every: int = 0        # FD step on the layer weights every N epochs (0 = off)
    theta_lr: float = 0.05
    fd_step: float = 1e-4
    penalty_coeff: float = 1.0

    def __post_init__(self):
        if self.optimizer not in ("adam", "sgd"):
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")


def _run_training(model, is_grassmann, x_train, epochs, seed, config, x_val, experiment_id):
    if config.optimizer == "adam":
        opt = Adam(config.lr)
    else:
        opt = SgdMomentum(config.lr, config.momentum)
    theta_opt = SgdMomentum(config.theta_lr, config.momentum)
    records = []
    t0 = time.perf_counter()

    def snapshot(epoch):
        wall = time.perf_counter() - t0
        train_loss = model.mse(x_train)
        if is_grassmann:
            train_loss += model.layer.penalty(config.penalty_coeff)
        if not np.isfinite(train_loss):
            raise NumericalError(f"autoencoder diverged at epoch {epoch}")
        records.append(
            MetricsRecord(experiment_id, seed, epoch, "train_loss", train_loss, wall)
        )
        if x_val is not None:
            records.append(
                MetricsRecord(
                    experiment_id, seed, epoch, "val_loss", model.mse(x_val), wall
                )
            )

    # fit the bottleneck statistics once so epoch-0 rows are defined
    model.latent(x_train, train=True)
    snapshot(0)

    n, d = x_train.shape
    for epoch in range(1, epochs + 1):
        spec = model.spec
        h = model.hidden(x_train)
        if is_grassmann:
            lat = model.layer.forward(h, train=True)
            basis = model.layer.basis_  # (hidden, k), treated as constant
        else:
            model.mean_ = h.mean(axis=0)
            lat = (h - model.mean_) @ model.w_mid.T
            basis = model.w_mid.T
        z = sigmoid(lat @ spec.w_dec.T + spec.b_dec)
        g = (2.0 / (n * d)) * (z - x_train) * z * (1.0 - z)
        g_wdec = g.T @ lat
        g_bdec = g.sum(axis=0)
        dlat = g @ spec.w_dec          # (N, k)
        dhc = dlat @ basis.T           # (N, hidden)
        dh = dhc - dhc.mean(axis=0)    # through the batch centering
        dpre = dh * (1.0 - h * h)
        g_wenc = dpre.T @ x_train
        g_benc = dpre.sum(axis=0)

        model.spec = AutoencoderSpec(
            input_dim=spec.input_dim,
            hidden_dim=spec.hidden_dim,
            latent_k=spec.latent_k,
            w_enc=opt.step("w_enc", spec.w_enc, g_wenc),
            b_enc=opt.step("b_enc", spec.b_enc, g_benc),
            w_dec=opt.step("w_dec", spec.w_dec, g_wdec),
            b_dec=opt.step("b_dec", spec.b_dec, g_bdec),
        )
        if not is_grassmann:
            model.w_mid = opt.step("w_mid", model.w_mid, dlat.T @ (h - model.mean_))
        elif config.theta_every and epoch % config.theta_every == 0:
            layer = model.layer
            spec_now = model.spec
            h_now = model.hidden(x_train)
            mu_now = h_now.mean(axis=0)
            hc_now = h_now - mu_now
            # block subspaces do not depend on theta; build them once
            points, kept = block_points(hc_now, spec_now.latent_k)
            manifold = Grassmann(spec_now.hidden_dim, spec_now.latent_k)

            def theta_loss(theta_flat):
                w = weight_map(theta_flat)
                basis = average_block_points(manifold, points, w[kept])
                z_c = sigmoid((hc_now @ basis) @ spec_now.w_dec.T + spec_now.b_dec)
                penalty = config.penalty_coeff * float((w.sum() - 1.0) ** 2)
                return float(np.mean((z_c - x_train) ** 2)) + penalty

            grad = finite_diff_grad(theta_loss, layer.theta, h=config.fd_step)
            layer.theta = theta_opt.step("theta", layer.theta, grad)

        # refresh stored bottleneck statistics for evaluation snapshots
        model.latent(x_train, train=True)
        snapshot(epoch)

    return model, records


def autoencoder_train(
    spec,
    data,
    epochs,
    seed,
    config=AeTrainConfig(),
    val_data=None,
    experiment_id="autoencode-mnist",
):
    """Train the Grassmann-bottleneck autoencoder; returns (model, records).

    ``data`` is an (N, input_dim) array in [0, 1]. Dense parameters take one
    full-batch analytic SGD-momentum step per epoch; the averaging-layer
    weights take a finite-difference step every ``config.theta_every``
    epochs. Records hold per-epoch train (and optional validation)
    reconstruction loss, starting from an untrained epoch-0 baseline;
    deterministic per (spec, data, seed, config).
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < spec.latent_k:
        raise ValidationError(f"data must be (N >= k, {spec.input_dim}), got {x.shape}")
    if epochs < 0:
        raise ValidationError("epochs must be >= 0")
    n_blocks = x.shape[0] // spec.latent_k
    model = GrassmannAutoencoder(spec, n_blocks)
    return _run_training(
        model, True, x, epochs, seed, config, _as_val(val_data), experiment_id
    )


def train_dense_autoencoder(
    spec,
    data,
    epochs,
    seed,
    config=AeTrainConfig(),
    val_data=None,
    experiment_id="autoencode-mnist",
):
    """Baseline trainer: identical loop with the dense bottleneck."""
    x = np.asarray(data, dtype=np.float64)
    model = DenseAutoencoder(spec, seed)
    return _run_training(
        model, False, x, epochs, seed, config, _as_val(val_data), experiment_id
    )


def _as_val(val_data):
    return None if val_data is None else np.asarray(val_data, dtype=np.float64)


def pca_pixel_mse(train_images, val_images, k):
    """Validation reconstruction error of pixel-space PCA with k components."""
    train_images = np.asarray(train_images, dtype=np.float64)
    val_images = np.asarray(val_images, dtype=np.float64)
    basis = pca_oracle(train_images, k)
    mean = train_images.mean(axis=0)
    centered = val_images - mean
    recon = mean + (centered @ basis) @ basis.T
    return float(np.mean((recon - val_images) ** 2))
