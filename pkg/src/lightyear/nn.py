"""Dense feed-forward classifier with hand-written backprop.

Parameters live in one flat float64 vector so that they can be exchanged,
averaged and corrupted without caring about layer structure. Per layer the
layout is ``W`` (fan_in x fan_out, row-major) followed by ``b`` (fan_out).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .data import LabeledDataset

ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class ModelSpec:
    layer_sizes: tuple[int, ...]
    activation: str = "relu"

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise ValueError("layer_sizes needs at least an input and an output size")
        if any(s < 1 for s in sizes):
            raise ValueError(f"layer sizes must be positive, got {sizes}")
        if sizes[-1] < 2:
            raise ValueError("output dimension (number of classes) must be >= 2")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_classes(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_params(self) -> int:
        s = self.layer_sizes
        return sum(s[l] * s[l + 1] + s[l + 1] for l in range(len(s) - 1))

    def slices(self) -> list[tuple[slice, slice, tuple[int, int]]]:
        """(weight slice, bias slice, weight shape) for every layer."""
        out = []
        pos = 0
        s = self.layer_sizes
        for l in range(len(s) - 1):
            n_w = s[l] * s[l + 1]
            out.append((slice(pos, pos + n_w), slice(pos + n_w, pos + n_w + s[l + 1]), (s[l], s[l + 1])))
            pos += n_w + s[l + 1]
        return out


@dataclass(eq=False)
class ParamVector:
    values: np.ndarray
    spec: ModelSpec

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.shape[0] != self.spec.n_params:
            raise ValueError(
                f"parameter vector has shape {self.values.shape}, spec expects ({self.spec.n_params},)"
            )

    def with_values(self, values: np.ndarray) -> ParamVector:
        return ParamVector(values, self.spec)

    def copy(self) -> ParamVector:
        return ParamVector(self.values.copy(), self.spec)

    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(self.values[ws].reshape(shape), self.values[bs]) for ws, bs, shape in self.spec.slices()]


@dataclass(frozen=True)
class OptimHyper:
    learning_rate: float = 1e-3
    momentum: float = 0.9
    weight_decay: float = 5e-4
    batch_size: int = 32
    local_epochs: int = 1

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be >= 0")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.local_epochs < 1:
            raise ValueError("local_epochs must be >= 1")


@dataclass
class OptimizerState:
    momentum_buffer: np.ndarray
    hyper: OptimHyper = field(default_factory=OptimHyper)

    @classmethod
    def fresh(cls, spec: ModelSpec, hyper: OptimHyper) -> OptimizerState:
        return cls(np.zeros(spec.n_params), hyper)


def init_params(spec: ModelSpec, seed: int | np.random.Generator) -> ParamVector:
    """Xavier-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    values = np.zeros(spec.n_params)
    for ws, _, (fan_in, fan_out) in spec.slices():
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        values[ws] = rng.uniform(-limit, limit, size=fan_in * fan_out)
    return ParamVector(values, spec)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    return np.maximum(z, 0.0) if kind == "relu" else np.tanh(z)


def _activate_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    return (z > 0).astype(np.float64) if kind == "relu" else 1.0 - a * a


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _forward(params: ParamVector, x: np.ndarray):
    layers = params.layers()
    act = params.spec.activation
    zs, acts = [], [x]
    a = x
    for l, (w, b) in enumerate(layers):
        z = a @ w + b
        zs.append(z)
        a = z if l == len(layers) - 1 else _activate(z, act)
        acts.append(a)
    return zs, acts


def logits(params: ParamVector, x: np.ndarray) -> np.ndarray:
    x = _check_input(params.spec, x)
    return _forward(params, x)[1][-1]


def _check_input(spec: ModelSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != spec.input_dim or x.ndim not in (1, 2):
        raise ValueError(f"input has shape {x.shape}, model expects last dimension {spec.input_dim}")
    return x


def predict_proba(params: ParamVector, x) -> np.ndarray:
    """Softmax class probabilities for one feature vector or a batch of rows."""
    x = _check_input(params.spec, x)
    single = x.ndim == 1
    p = softmax(_forward(params, np.atleast_2d(x))[1][-1])
    return p[0] if single else p


def loss_and_grad(params: ParamVector, batch: LabeledDataset, weight_decay: float = 0.0) -> tuple[float, ParamVector]:
    """Mean cross-entropy plus ``weight_decay/2 * ||theta||^2`` and its exact gradient."""
    if batch.n == 0:
        raise ValueError("loss_and_grad needs a nonempty batch")
    x = _check_input(params.spec, batch.features)
    y = batch.labels
    n = x.shape[0]
    zs, acts = _forward(params, x)
    out = zs[-1]
    shifted = out - out.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    ce = float(np.mean(log_z - shifted[np.arange(n), y]))
    theta = params.values
    loss = ce + 0.5 * weight_decay * float(theta @ theta)

    grad = np.zeros_like(theta)
    delta = np.exp(shifted - log_z[:, None])
    delta[np.arange(n), y] -= 1.0
    delta /= n
    layers = params.layers()
    slices = params.spec.slices()
    act = params.spec.activation
    for l in range(len(layers) - 1, -1, -1):
        ws, bs, _ = slices[l]
        grad[ws] = (acts[l].T @ delta).ravel()
        grad[bs] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ layers[l][0].T) * _activate_grad(zs[l - 1], acts[l], act)
    grad += weight_decay * theta
    return loss, params.with_values(grad)


def train_local(
    params: ParamVector,
    opt: OptimizerState,
    train: LabeledDataset,
    seed: int | np.random.Generator,
) -> tuple[ParamVector, OptimizerState]:
    """Mini-batch SGD with momentum and L2 weight decay over seeded shuffles.

    Inputs are not modified; the returned parameters and momentum buffer are new
    arrays.
    """
    if train.n == 0:
        raise ValueError("cannot train on an empty shard")
    hp = opt.hyper
    rng = np.random.default_rng(seed)
    theta = params.values.copy()
    buf = opt.momentum_buffer.copy()
    for _ in range(hp.local_epochs):
        order = rng.permutation(train.n)
        for start in range(0, train.n, hp.batch_size):
            batch = train.subset(order[start : start + hp.batch_size])
            _, g = loss_and_grad(params.with_values(theta), batch, hp.weight_decay)
            buf = hp.momentum * buf + g.values
            theta = theta - hp.learning_rate * buf
    return params.with_values(theta), replace(opt, momentum_buffer=buf)
