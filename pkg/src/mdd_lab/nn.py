"""Minimal dense feed-forward networks with manual backpropagation.

Double precision throughout; weight init is uniform(-a, a) with
``a = sqrt(6 / (fan_in + fan_out))`` drawn from the package PRNG and zero
biases, so runs are bit-reproducible. A model plus its tapes and optimizer
state belong to one training loop at a time; read-only snapshots may be
evaluated concurrently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .prng import Xoshiro256StarStar

_ACTIVATIONS = ("relu", "identity")


@dataclass(eq=False)
class DenseLayer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass(eq=False)
class MlpModel:
    layers: list[DenseLayer]
    version: int = 0  # bumped on every optimizer step; invalidates old tapes

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if b.weight.shape[1] != a.weight.shape[0]:
                raise ValueError("adjacent layer dimensions must chain")


def input_dim(model: MlpModel) -> int:
    return model.layers[0].weight.shape[1]


def output_dim(model: MlpModel) -> int:
    return model.layers[-1].weight.shape[0]


def init_mlp(sizes, seed: int, last_identity: bool = True) -> MlpModel:
    """Build an MLP with the given layer sizes, ReLU everywhere except
    (optionally) the last layer."""
    sizes = list(sizes)
    if len(sizes) < 2:
        raise ValueError("need at least input and output sizes")
    rng = Xoshiro256StarStar(seed)
    layers = []
    for li in range(len(sizes) - 1):
        fan_in, fan_out = sizes[li], sizes[li + 1]
        a = math.sqrt(6.0 / (fan_in + fan_out))
        W = np.empty((fan_out, fan_in))
        for r in range(fan_out):
            for c in range(fan_in):
                W[r, c] = a * (2.0 * rng.uniform() - 1.0)
        act = "identity" if (last_identity and li == len(sizes) - 2) else "relu"
        layers.append(DenseLayer(W, np.zeros(fan_out), act))
    return MlpModel(layers)


@dataclass(eq=False)
class GradTape:
    """Forward cache for one batch; valid until the model is next updated."""

    model: MlpModel
    model_version: int
    inputs: list[np.ndarray]  # input to each layer
    preacts: list[np.ndarray]  # pre-activation of each layer
    output: np.ndarray


def forward(model: MlpModel, X: np.ndarray) -> tuple[np.ndarray, GradTape]:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != input_dim(model):
        raise ValueError(
            f"expected input of shape (n, {input_dim(model)}), got {X.shape}"
        )
    inputs, preacts = [], []
    h = X
    for layer in model.layers:
        inputs.append(h)
        z = h @ layer.weight.T + layer.bias
        preacts.append(z)
        h = np.maximum(z, 0.0) if layer.activation == "relu" else z
    return h, GradTape(model, model.version, inputs, preacts, h)


def backward(tape: GradTape, upstream: np.ndarray):
    """Exact reverse-mode gradients of the forward map.

    Returns ``(param_grads, input_grad)`` with one ``(dW, db)`` pair per
    layer. ReLU passes gradient only where the pre-activation is strictly
    positive.
    """
    model = tape.model
    if tape.model_version != model.version:
        raise ValueError("stale tape: the model was updated after this forward pass")
    g = np.asarray(upstream, dtype=np.float64)
    if g.shape != tape.output.shape:
        raise ValueError("upstream gradient shape must match the forward output")
    param_grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(model.layers)
    for li in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[li]
        if layer.activation == "relu":
            g = g * (tape.preacts[li] > 0.0)
        dW = g.T @ tape.inputs[li]
        db = g.sum(axis=0)
        param_grads[li] = (dW, db)
        g = g @ layer.weight
    return param_grads, g


def grl(upstream: np.ndarray, coeff: float) -> np.ndarray:
    """Gradient reversal: forward is identity, backward scales by -coeff.

    coeff = 0 detaches (returns exact zeros rather than signed zeros).
    """
    if coeff < 0:
        raise ValueError("grl coefficient must be nonnegative")
    if coeff == 0.0:
        return np.zeros_like(upstream)
    return -coeff * np.asarray(upstream, dtype=np.float64)


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-shift stabilization."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _logsumexp(z: np.ndarray) -> np.ndarray:
    m = z.max(axis=-1)
    return m + np.log(np.exp(z - m[..., None]).sum(axis=-1))


def _promote(logits, y):
    z = np.asarray(logits, dtype=np.float64)
    single = z.ndim == 1
    if single:
        z = z[None, :]
        y = np.array([y], dtype=np.int64)
    else:
        y = np.asarray(y, dtype=np.int64)
    if y.min() < 0 or y.max() >= z.shape[1]:
        raise ValueError("label out of range")
    return z, y, single


def ce_loss(logits, y):
    """Cross-entropy ``-log softmax_y(z)`` per example (scalar for 1-d input)."""
    z, y, single = _promote(logits, y)
    vals = _logsumexp(z) - z[np.arange(len(y)), y]
    return float(vals[0]) if single else vals


def ce_loss_grad(logits, y):
    """Gradient of the per-example cross-entropy w.r.t. the logits."""
    z, y, single = _promote(logits, y)
    g = softmax(z)
    g[np.arange(len(y)), y] -= 1.0
    return g[0] if single else g


def log1m_softmax(logits, y):
    """``log(1 - softmax_y(z))`` per example, computed stably as
    ``logsumexp(z_{i != y}) - logsumexp(z)``. Requires k >= 2."""
    z, y, single = _promote(logits, y)
    if z.shape[1] < 2:
        raise ValueError("log1m_softmax needs k >= 2 (1 - softmax is 0 for k = 1)")
    masked = z.copy()
    masked[np.arange(len(y)), y] = -np.inf
    vals = _logsumexp(masked) - _logsumexp(z)
    return float(vals[0]) if single else vals


def log1m_softmax_grad(logits, y):
    """Gradient of ``log(1 - softmax_y(z))``: softmax excluding y, minus softmax."""
    z, y, single = _promote(logits, y)
    if z.shape[1] < 2:
        raise ValueError("log1m_softmax needs k >= 2")
    masked = z.copy()
    masked[np.arange(len(y)), y] = -np.inf
    g = softmax(masked) - softmax(z)
    return g[0] if single else g


@dataclass(eq=False)
class OptimizerState:
    """Per-parameter velocity buffers for Nesterov SGD."""

    velocities: list[tuple[np.ndarray, np.ndarray]]
    momentum: float = 0.9
    step_count: int = 0

    @classmethod
    def for_model(cls, model: MlpModel, momentum: float = 0.9) -> "OptimizerState":
        vel = [
            (np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in model.layers
        ]
        return cls(vel, momentum)


def sgd_nesterov_step(
    state: OptimizerState, model: MlpModel, grads, lr: float
) -> None:
    """One Nesterov update per parameter:
    ``v <- mu v - lr g`` then ``theta <- theta + mu v - lr g``."""
    mu = state.momentum
    if len(grads) != len(model.layers):
        raise ValueError("gradient structure must mirror the model")
    for layer, (vW, vb), (gW, gb) in zip(model.layers, state.velocities, grads):
        if gW.shape != layer.weight.shape or gb.shape != layer.bias.shape:
            raise ValueError("gradient shapes must mirror parameter shapes")
        vW *= mu
        vW -= lr * gW
        vb *= mu
        vb -= lr * gb
        layer.weight += mu * vW - lr * gW
        layer.bias += mu * vb - lr * gb
    state.step_count += 1
    model.version += 1


def lr_schedule(
    step: int, total: int, lr0: float, alpha: float = 10.0, beta: float = 0.75
) -> float:
    """Annealed rate ``lr0 * (1 + alpha * p) ** -beta`` with progress p = step/total."""
    if total < 1:
        raise ValueError("total must be >= 1")
    p = step / total
    return lr0 * (1.0 + alpha * p) ** (-beta)


def add_grads(a, b):
    """Elementwise sum of two gradient structures."""
    return [(ga[0] + gb[0], ga[1] + gb[1]) for ga, gb in zip(a, b)]


def scale_grads(g, c: float):
    return [(c * gW, c * gb) for gW, gb in g]


def zero_grads_like(model: MlpModel):
    return [(np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in model.layers]


CHECKPOINT_FORMAT = "mdd-lab-mlp"
CHECKPOINT_VERSION = 1


def model_to_dict(model: MlpModel) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "layers": [
            {
                "activation": l.activation,
                "shape": list(l.weight.shape),
                "weight": l.weight.reshape(-1).tolist(),  # row-major
                "bias": l.bias.tolist(),
            }
            for l in model.layers
        ],
    }


def model_from_dict(doc: dict) -> MlpModel:
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError("not an mdd-lab model checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')}")
    layers = []
    for spec in doc["layers"]:
        out_d, in_d = spec["shape"]
        W = np.array(spec["weight"], dtype=np.float64).reshape(out_d, in_d)
        b = np.array(spec["bias"], dtype=np.float64)
        layers.append(DenseLayer(W, b, spec["activation"]))
    return MlpModel(layers)


def save_model(model: MlpModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> MlpModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
