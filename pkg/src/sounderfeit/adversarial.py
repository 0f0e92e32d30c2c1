"""Conditional adversarial autoencoder: losses, training schedule, checkpoints.

The encoder maps a 200-sample normalized difference window to n latent
dims (z) followed by m conditional dims (y-hat).  The decoder maps (z, y)
back to the window; the discriminator scores latent vectors against a
uniform prior on [-1, 1]^n.  Per batch: one autoencoder step, then (when
adversarial) one generator step on the encoder and one discriminator step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import NormStats
from .neuralnet import (DenseAffine, Mlp2, ShapeError, mlp_backward, mlp_copy,
                        mlp_forward, mlp_init, sgd_step, SgdConfig)

HIDDEN = 100
DATA_DIM = 200
DEFAULT_LAMBDA = 0.5

# Batch-summed gradients with the published learning rates blow up within a
# few plain-SGD steps (the reconstruction term alone sums 50*200 squared
# residuals).  Updates therefore use per-batch-normalized gradients, with
# separate extra scales for the reconstruction and conditional terms of the
# autoencoder step, calibrated once against the acceptance targets:
# reconstruction grads / (batch * GRAD_SCALE_X), conditional grads /
# (batch * GRAD_SCALE_Y), generator and discriminator grads / batch.
GRAD_SCALE_X = 10.0
GRAD_SCALE_Y = 0.5

CHECKPOINT_VERSION = 1

# name -> (n_latent, n_cond, adversarial)
CONDITIONS = {
    "D1_Z2_Y": (1, 2, True),
    "D0_Z2_Y": (0, 2, True),
    "N1_Z2_Y": (1, 2, False),
    "D1_Z1_Y": (1, 1, True),
    "D2_Z0_Y": (2, 0, True),
    "N2_Z0_Y": (2, 0, False),
}


class TrainingDivergenceError(RuntimeError):
    """A loss went non-finite; carries the offending batch index."""

    def __init__(self, batch_index, message):
        super().__init__(f"batch {batch_index}: {message}")
        self.batch_index = batch_index


class FormatError(RuntimeError):
    """Checkpoint file is malformed."""


@dataclass(frozen=True)
class ExperimentCondition:
    name: str
    n_latent: int
    n_cond: int
    adversarial: bool

    @classmethod
    def from_name(cls, name):
        if name not in CONDITIONS:
            raise ValueError(
                f"unknown condition {name!r}; valid: {', '.join(CONDITIONS)}")
        n, m, adv = CONDITIONS[name]
        return cls(name=name, n_latent=n, n_cond=m, adversarial=adv)


@dataclass
class TrainConfig:
    batch_size: int = 50
    n_batches: int = 4000
    lr_ae: float = 0.005
    lr_g: float = 0.05
    lr_d: float = 0.05
    lam: float = DEFAULT_LAMBDA
    seed: int = 0
    holdout_fraction: float = 0.25

    def __post_init__(self):
        if min(self.batch_size, self.n_batches) < 1:
            raise ValueError("batch_size and n_batches must be positive")
        if min(self.lr_ae, self.lr_g, self.lr_d) <= 0:
            raise ValueError("learning rates must be positive")


@dataclass
class AaeModel:
    encoder: Mlp2
    decoder: Mlp2
    discriminator: Mlp2
    n_latent: int
    n_cond: int
    lam: float
    stats: NormStats
    activation: str = "relu"
    condition_name: str = ""
    seed: int = 0
    corpus_hash: str = ""
    holdout_indices: np.ndarray = field(
        default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def code_dim(self):
        return self.n_latent + self.n_cond


def model_init(condition, stats, seed=0, activation="relu",
               lam=DEFAULT_LAMBDA, data_dim=DATA_DIM, hidden=HIDDEN):
    n, m = condition.n_latent, condition.n_cond
    if n + m < 1:
        raise ValueError("need at least one code dimension")
    rng = np.random.default_rng(seed)
    return AaeModel(
        encoder=mlp_init(data_dim, hidden, n + m, rng, activation),
        decoder=mlp_init(n + m, hidden, data_dim, rng, activation),
        discriminator=mlp_init(max(n, 1), hidden, 1, rng, activation),
        n_latent=n, n_cond=m, lam=lam, stats=stats,
        activation=activation, condition_name=condition.name, seed=seed,
    )


def encode(model, x):
    """Returns (z, y_hat): first n and last m dims of the encoder output."""
    out, _ = mlp_forward(model.encoder, np.atleast_2d(x))
    return out[:, :model.n_latent], out[:, model.n_latent:]


def decode(model, z, y):
    """Generator path: decode explicit latent and conditional values."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if z.shape[1] != model.n_latent or y.shape[1] != model.n_cond:
        raise ShapeError(
            f"expected z dims {model.n_latent} and y dims {model.n_cond}, "
            f"got {z.shape[1]} and {y.shape[1]}")
    code = np.concatenate([z, y], axis=1)
    out, _ = mlp_forward(model.decoder, code)
    return out


def _logistic(a):
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    e = np.exp(a[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _softplus(a):
    # log(1 + e^a), stable
    return np.logaddexp(0.0, a)


def loss_ae(model, x, y):
    """Summed reconstruction + lambda * conditional loss, with gradients
    for encoder and decoder."""
    x = np.asarray(x, dtype=np.float64)
    e_out, e_cache = mlp_forward(model.encoder, x)
    d_out, d_cache = mlp_forward(model.decoder, e_out)
    rx = x - d_out
    loss = float(np.sum(rx * rx))
    dec_grads, grad_code = mlp_backward(model.decoder, d_cache, -2.0 * rx)
    if model.n_cond > 0:
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (x.shape[0], model.n_cond):
            raise ShapeError(
                f"expected y shape ({x.shape[0]}, {model.n_cond}), "
                f"got {y.shape}")
        ry = y - e_out[:, model.n_latent:]
        loss += model.lam * float(np.sum(ry * ry))
        grad_code = grad_code.copy()
        grad_code[:, model.n_latent:] += -2.0 * model.lam * ry
    enc_grads, _ = mlp_backward(model.encoder, e_cache, grad_code)
    return loss, enc_grads, dec_grads


def loss_g(model, x):
    """Generator NLL: -sum log(sigma(h(E_z(x)))); gradients for the encoder
    only (the discriminator is treated as fixed)."""
    if model.n_latent < 1:
        raise ValueError("generator loss requires n_latent >= 1")
    x = np.asarray(x, dtype=np.float64)
    e_out, e_cache = mlp_forward(model.encoder, x)
    z = e_out[:, :model.n_latent]
    a, h_cache = mlp_forward(model.discriminator, z)
    loss = float(np.sum(_softplus(-a)))
    _, grad_z = mlp_backward(model.discriminator, h_cache, _logistic(a) - 1.0)
    grad_code = np.zeros_like(e_out)
    grad_code[:, :model.n_latent] = grad_z
    enc_grads, _ = mlp_backward(model.encoder, e_cache, grad_code)
    return loss, enc_grads


def loss_d(model, x, z_prior):
    """Discriminator NLL: -sum(log sigma(h(z)) + log(1 - sigma(h(E_z(x)))));
    gradients for the discriminator only (the encoder is constant)."""
    if model.n_latent < 1:
        raise ValueError("discriminator loss requires n_latent >= 1")
    x = np.asarray(x, dtype=np.float64)
    z_prior = np.asarray(z_prior, dtype=np.float64)
    if z_prior.shape != (x.shape[0], model.n_latent):
        raise ShapeError(
            f"expected prior shape ({x.shape[0]}, {model.n_latent}), "
            f"got {z_prior.shape}")
    e_out, _ = mlp_forward(model.encoder, x)
    z_fake = e_out[:, :model.n_latent]
    a_real, cache_real = mlp_forward(model.discriminator, z_prior)
    a_fake, cache_fake = mlp_forward(model.discriminator, z_fake)
    loss = float(np.sum(_softplus(-a_real)) + np.sum(_softplus(a_fake)))
    grads, _ = mlp_backward(model.discriminator, cache_real,
                            _logistic(a_real) - 1.0)
    grads_fake, _ = mlp_backward(model.discriminator, cache_fake,
                                 _logistic(a_fake))
    grads += grads_fake
    return loss, grads


@dataclass
class BatchReport:
    l_ae: float
    l_g: float
    l_d: float


def sample_prior(rng, batch_size, n_latent):
    return rng.uniform(-1.0, 1.0, size=(batch_size, n_latent))


def _ae_step_grads(model, x, y, x_div, y_div):
    """Like loss_ae, but with the reconstruction and conditional gradient
    terms divided by x_div and y_div (the reported loss stays summed)."""
    x = np.asarray(x, dtype=np.float64)
    e_out, e_cache = mlp_forward(model.encoder, x)
    d_out, d_cache = mlp_forward(model.decoder, e_out)
    rx = x - d_out
    loss = float(np.sum(rx * rx))
    dec_grads, grad_code = mlp_backward(model.decoder, d_cache,
                                        -2.0 * rx / x_div)
    if model.n_cond > 0:
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (x.shape[0], model.n_cond):
            raise ShapeError(
                f"expected y shape ({x.shape[0]}, {model.n_cond}), "
                f"got {y.shape}")
        ry = y - e_out[:, model.n_latent:]
        loss += model.lam * float(np.sum(ry * ry))
        grad_code = grad_code.copy()
        grad_code[:, model.n_latent:] += -2.0 * model.lam * ry / y_div
    enc_grads, _ = mlp_backward(model.encoder, e_cache, grad_code)
    return loss, enc_grads, dec_grads


def _scale_grads(grads, div):
    grads.dw1 /= div
    grads.db1 /= div
    grads.dw2 /= div
    grads.db2 /= div
    return grads


def train_batch(model, x, y, config, adversarial, rng, batch_index=0):
    """One training batch: AE step, then (if adversarial and n >= 1) a
    generator step and a discriminator step with a fresh prior draw.
    Gradients are per-batch-normalized (see GRAD_SCALE_X/GRAD_SCALE_Y)."""
    s = x.shape[0]
    l_ae, enc_g, dec_g = _ae_step_grads(model, x, y,
                                        s * GRAD_SCALE_X, s * GRAD_SCALE_Y)
    if not np.isfinite(l_ae):
        raise TrainingDivergenceError(batch_index, f"L_AE={l_ae}")
    sgd_step(model.encoder, enc_g, SgdConfig(config.lr_ae))
    sgd_step(model.decoder, dec_g, SgdConfig(config.lr_ae))
    l_g = 0.0
    l_d = 0.0
    if adversarial and model.n_latent >= 1:
        l_g, enc_g = loss_g(model, x)
        if not np.isfinite(l_g):
            raise TrainingDivergenceError(batch_index, f"L_G={l_g}")
        sgd_step(model.encoder, _scale_grads(enc_g, s), SgdConfig(config.lr_g))
        z = sample_prior(rng, x.shape[0], model.n_latent)
        l_d, disc_g = loss_d(model, x, z)
        if not np.isfinite(l_d):
            raise TrainingDivergenceError(batch_index, f"L_D={l_d}")
        sgd_step(model.discriminator, _scale_grads(disc_g, s),
                 SgdConfig(config.lr_d))
    return BatchReport(l_ae=l_ae, l_g=l_g, l_d=l_d)


def split_holdout(n, rng, holdout_fraction=0.25):
    """Seeded shuffle; the last quarter is held out."""
    perm = rng.permutation(n)
    n_hold = int(round(n * holdout_fraction))
    if n_hold >= n:
        raise ValueError("holdout would consume the whole corpus")
    return perm[:n - n_hold], perm[n - n_hold:]


def train(corpus, condition, config, progress=None):
    """Run config.n_batches training batches; returns the model and the
    per-batch reports."""
    if isinstance(condition, str):
        condition = ExperimentCondition.from_name(condition)
    n = len(corpus)
    if n < 2:
        raise ValueError("corpus too small to train on")
    rng = np.random.default_rng(config.seed)
    model = model_init(condition, corpus.stats, seed=config.seed,
                      lam=config.lam)
    model.corpus_hash = corpus.content_hash()
    x_all = corpus.training_matrix()
    y_all = corpus.cond_labels(condition.n_cond)
    train_idx, hold_idx = split_holdout(n, rng, config.holdout_fraction)
    model.holdout_indices = np.sort(hold_idx)
    reports = []
    order = np.zeros(0, dtype=np.int64)
    pos = 0
    for b in range(config.n_batches):
        if pos + config.batch_size > order.shape[0]:
            order = rng.permutation(train_idx)
            pos = 0
        idx = order[pos:pos + config.batch_size]
        pos += config.batch_size
        rep = train_batch(model, x_all[idx], y_all[idx], config,
                          condition.adversarial, rng, batch_index=b)
        reports.append(rep)
        if progress is not None and (b + 1) % 100 == 0:
            progress(b + 1, rep)
    return model, reports


def holdout_mse(model, corpus):
    """Mean per-element squared reconstruction error on held-out windows."""
    idx = model.holdout_indices
    x = corpus.training_matrix()[idx]
    z, y_hat = encode(model, x)
    x_hat = decode(model, z, y_hat)
    return float(np.mean((x - x_hat) ** 2))


def _net_to_dict(net):
    return {"w1": net.layer1.w.tolist(), "b1": net.layer1.b.tolist(),
            "w2": net.layer2.w.tolist(), "b2": net.layer2.b.tolist()}


def _net_from_dict(d, k1, b1, k2, b2, activation):
    return Mlp2(layer1=DenseAffine(w=np.array(d[k1], dtype=np.float64),
                                   b=np.array(d[b1], dtype=np.float64)),
                layer2=DenseAffine(w=np.array(d[k2], dtype=np.float64),
                                   b=np.array(d[b2], dtype=np.float64)),
                activation=activation)


def save_model(model, path):
    doc = {
        "version": CHECKPOINT_VERSION,
        "condition": model.condition_name,
        "n_latent": model.n_latent,
        "n_cond": model.n_cond,
        "lambda": model.lam,
        "activation": model.activation,
        "seed": model.seed,
        "corpus_hash": model.corpus_hash,
        "norm_mean": model.stats.mean.tolist(),
        "norm_std": model.stats.std.tolist(),
        "w1": model.encoder.layer1.w.tolist(),
        "b1": model.encoder.layer1.b.tolist(),
        "w2": model.encoder.layer2.w.tolist(),
        "b2": model.encoder.layer2.b.tolist(),
        "w3": model.decoder.layer1.w.tolist(),
        "b3": model.decoder.layer1.b.tolist(),
        "w4": model.decoder.layer2.w.tolist(),
        "b4": model.decoder.layer2.b.tolist(),
        "w5": model.discriminator.layer1.w.tolist(),
        "b5": model.discriminator.layer1.b.tolist(),
        "w6": model.discriminator.layer2.w.tolist(),
        "b6": model.discriminator.layer2.b.tolist(),
        "holdout_indices": model.holdout_indices.tolist(),
    }
    with open(path, "w") as f:
        json.dump(doc, f)


def load_model(path):
    try:
        with open(path) as f:
            doc = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise FormatError(f"unreadable checkpoint: {e}") from e
    if not isinstance(doc, dict) or doc.get("version") != CHECKPOINT_VERSION:
        raise FormatError("missing or unsupported checkpoint version")
    try:
        activation = doc["activation"]
        model = AaeModel(
            encoder=_net_from_dict(doc, "w1", "b1", "w2", "b2", activation),
            decoder=_net_from_dict(doc, "w3", "b3", "w4", "b4", activation),
            discriminator=_net_from_dict(doc, "w5", "b5", "w6", "b6",
                                         activation),
            n_latent=int(doc["n_latent"]),
            n_cond=int(doc["n_cond"]),
            lam=float(doc["lambda"]),
            stats=NormStats(mean=np.array(doc["norm_mean"], dtype=np.float64),
                            std=np.array(doc["norm_std"], dtype=np.float64)),
            activation=activation,
            condition_name=doc["condition"],
            seed=int(doc["seed"]),
            corpus_hash=doc["corpus_hash"],
            holdout_indices=np.array(doc["holdout_indices"], dtype=np.int64),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"malformed checkpoint field: {e}") from e
    return model


def models_equal(a, b):
    nets = [(a.encoder, b.encoder), (a.decoder, b.decoder),
            (a.discriminator, b.discriminator)]
    for na, nb in nets:
        for pa, pb in [(na.layer1.w, nb.layer1.w), (na.layer1.b, nb.layer1.b),
                       (na.layer2.w, nb.layer2.w), (na.layer2.b, nb.layer2.b)]:
            if not np.array_equal(pa, pb):
                return False
    return (a.n_latent, a.n_cond, a.lam, a.activation, a.condition_name,
            a.seed, a.corpus_hash) == \
           (b.n_latent, b.n_cond, b.lam, b.activation, b.condition_name,
            b.seed, b.corpus_hash) \
        and np.array_equal(a.holdout_indices, b.holdout_indices) \
        and np.array_equal(a.stats.mean, b.stats.mean) \
        and np.array_equal(a.stats.std, b.stats.std)
