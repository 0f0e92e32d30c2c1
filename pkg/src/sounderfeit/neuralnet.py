"""Dense two-layer networks with exact reverse-mode gradients and plain SGD.

Just enough machinery for the encoder/decoder/discriminator trio: one
hidden nonlinearity (relu or tanh), linear outputs, batch inputs as
(batch, dim) float64 matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "tanh")


class ShapeError(ValueError):
    """Input or gradient shapes do not match the network."""


@dataclass
class DenseAffine:
    w: np.ndarray  # (in_dim, out_dim)
    b: np.ndarray  # (out_dim,)

    @property
    def in_dim(self):
        return self.w.shape[0]

    @property
    def out_dim(self):
        return self.w.shape[1]


@dataclass
class Mlp2:
    layer1: DenseAffine
    layer2: DenseAffine
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.layer1.out_dim != self.layer2.in_dim:
            raise ShapeError("hidden widths of layer1/layer2 disagree")

    @property
    def in_dim(self):
        return self.layer1.in_dim

    @property
    def out_dim(self):
        return self.layer2.out_dim


@dataclass
class MlpGrads:
    dw1: np.ndarray
    db1: np.ndarray
    dw2: np.ndarray
    db2: np.ndarray

    def __iadd__(self, other):
        self.dw1 += other.dw1
        self.db1 += other.db1
        self.dw2 += other.dw2
        self.db2 += other.db2
        return self


@dataclass
class SgdConfig:
    learning_rate: float

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")


def _glorot(rng, in_dim, out_dim):
    r = math.sqrt(6.0 / (in_dim + out_dim))
    return rng.uniform(-r, r, size=(in_dim, out_dim))


def mlp_init(in_dim, hidden, out_dim, rng, activation="relu"):
    """Glorot-uniform weights, zero biases."""
    return Mlp2(
        layer1=DenseAffine(w=_glorot(rng, in_dim, hidden),
                           b=np.zeros(hidden)),
        layer2=DenseAffine(w=_glorot(rng, hidden, out_dim),
                           b=np.zeros(out_dim)),
        activation=activation,
    )


def mlp_forward(net, x):
    """Returns (y, cache); cache feeds mlp_backward."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.in_dim:
        raise ShapeError(
            f"expected input shape (batch, {net.in_dim}), got {x.shape}")
    a1 = x @ net.layer1.w + net.layer1.b
    if net.activation == "relu":
        h = np.maximum(a1, 0.0)
    else:
        h = np.tanh(a1)
    y = h @ net.layer2.w + net.layer2.b
    return y, (x, a1, h)


def mlp_backward(net, cache, grad_out):
    """Exact gradients of the forward map; returns (MlpGrads, grad_x)."""
    x, a1, h = cache
    grad_out = np.asarray(grad_out, dtype=np.float64)
    if grad_out.shape != (x.shape[0], net.out_dim):
        raise ShapeError(
            f"expected grad shape ({x.shape[0]}, {net.out_dim}), "
            f"got {grad_out.shape}")
    dw2 = h.T @ grad_out
    db2 = grad_out.sum(axis=0)
    dh = grad_out @ net.layer2.w.T
    if net.activation == "relu":
        da1 = dh * (a1 > 0.0)
    else:
        da1 = dh * (1.0 - np.tanh(a1) ** 2)
    dw1 = x.T @ da1
    db1 = da1.sum(axis=0)
    grad_x = da1 @ net.layer1.w.T
    return MlpGrads(dw1=dw1, db1=db1, dw2=dw2, db2=db2), grad_x


def sgd_step(net, grads, config):
    """In-place p <- p - lr * g; returns the updated net."""
    lr = config.learning_rate
    for p, g in ((net.layer1.w, grads.dw1), (net.layer1.b, grads.db1),
                 (net.layer2.w, grads.dw2), (net.layer2.b, grads.db2)):
        if p.shape != g.shape:
            raise ShapeError(f"param shape {p.shape} != grad shape {g.shape}")
        p -= lr * g
    return net


def mlp_params(net):
    return [net.layer1.w, net.layer1.b, net.layer2.w, net.layer2.b]


def mlp_copy(net):
    return Mlp2(
        layer1=DenseAffine(w=net.layer1.w.copy(), b=net.layer1.b.copy()),
        layer2=DenseAffine(w=net.layer2.w.copy(), b=net.layer2.b.copy()),
        activation=net.activation,
    )
