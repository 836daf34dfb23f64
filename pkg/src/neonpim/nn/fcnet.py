"""Fully-connected network with analytic backpropagation.

Weights are stored ``(out, in)``; batches are row-major ``(batch, features)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("tanh", "linear", "relu", "sigmoid")


class ShapeError(ValueError):
    pass


@dataclass
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str = "tanh"
    frozen: bool = False

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ShapeError(f"layer weight {self.weight.shape} and bias {self.bias.shape} "
                             "do not agree")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


@dataclass
class FcNet:
    layers: list[Layer] = field(default_factory=list)

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise ShapeError(f"layer dims do not chain: {a.out_dim} -> {b.in_dim}")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def dims(self) -> list[int]:
        return [self.in_dim] + [l.out_dim for l in self.layers]

    @property
    def hidden_layers(self) -> int:
        return len(self.layers) - 1

    @property
    def frozen_mask(self) -> list[bool]:
        return [l.frozen for l in self.layers]

    def n_params(self) -> int:
        return sum(l.weight.size + l.bias.size for l in self.layers)

    def copy(self) -> "FcNet":
        return FcNet([Layer(l.weight.copy(), l.bias.copy(), l.activation, l.frozen)
                      for l in self.layers])

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return forward(self, x)[0]


def xavier_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def build_net(dims: list[int], rng: np.random.Generator, hidden_act: str = "tanh",
              out_act: str = "linear") -> FcNet:
    """Xavier-uniform weights and zero biases; ``dims`` lists every layer width."""
    layers = []
    for k, (fi, fo) in enumerate(zip(dims, dims[1:])):
        act = out_act if k == len(dims) - 2 else hidden_act
        layers.append(Layer(xavier_uniform(rng, fo, fi), np.zeros(fo), act))
    return FcNet(layers)


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "sigmoid":
        return 0.5 * np.tanh(0.5 * z) + 0.5
    return z


def _act_grad(name: str, out: np.ndarray) -> np.ndarray | None:
    """Derivative expressed through the activation output; None for linear."""
    if name == "tanh":
        return 1.0 - out * out
    if name == "relu":
        return (out > 0).astype(np.float64)
    if name == "sigmoid":
        return out * (1.0 - out)
    return None


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]     # input to each layer
    outputs: list[np.ndarray]    # post-activation output of each layer
    dims: tuple[int, ...]
    squeeze: bool


def forward(net: FcNet, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    a = x[None] if squeeze else x
    if a.ndim != 2 or a.shape[1] != net.in_dim:
        raise ShapeError(f"input of width {a.shape[-1]} for a net expecting {net.in_dim}")
    inputs, outputs = [], []
    for layer in net.layers:
        inputs.append(a)
        a = _act(layer.activation, a @ layer.weight.T + layer.bias)
        outputs.append(a)
    cache = ForwardCache(inputs, outputs, tuple(net.dims), squeeze)
    return (a[0] if squeeze else a), cache


def mse(pred: np.ndarray, truth: np.ndarray) -> float:
    pred, truth = np.asarray(pred, np.float64), np.asarray(truth, np.float64)
    if pred.shape != truth.shape:
        raise ShapeError(f"shape {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise ValueError("mse of an empty batch")
    d = pred - truth
    return float(np.mean(d * d))


def mse_grad(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    return 2.0 * (pred - truth) / pred.size


def backward(net: FcNet, cache: ForwardCache, grad_out: np.ndarray | None = None,
             truth: np.ndarray | None = None
             ) -> tuple[list[tuple[np.ndarray, np.ndarray]], np.ndarray]:
    """Gradients ``[(dW, db), ...]`` and the gradient w.r.t. the net input.

    Pass ``grad_out`` (dL/dy) directly, or ``truth`` to differentiate the MSE.
    Frozen layers get exact zeros but still propagate the gradient.
    """
    if tuple(net.dims) != cache.dims:
        raise ShapeError("cache was produced by a net with different dimensions")
    y = cache.outputs[-1]
    if grad_out is None:
        if truth is None:
            raise ValueError("need grad_out or truth")
        truth = np.asarray(truth, np.float64).reshape(y.shape)
        g = mse_grad(y, truth)
    else:
        g = np.asarray(grad_out, np.float64).reshape(y.shape)
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(net.layers)
    for k in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[k]
        d = _act_grad(layer.activation, cache.outputs[k])
        if d is not None:
            g = g * d
        if layer.frozen:
            grads[k] = (np.zeros_like(layer.weight), np.zeros_like(layer.bias))
        else:
            grads[k] = (g.T @ cache.inputs[k], g.sum(axis=0))
        g = g @ layer.weight
    return grads, (g[0] if cache.squeeze else g)


def cosine_similarity(pred: np.ndarray, truth: np.ndarray) -> float:
    """Mean row-wise cosine similarity; a pair of zero rows counts as 1, one zero row as 0."""
    p = np.atleast_2d(np.asarray(pred, np.float64))
    t = np.atleast_2d(np.asarray(truth, np.float64))
    if p.shape != t.shape:
        raise ShapeError(f"shape {p.shape} vs {t.shape}")
    np_, nt = np.linalg.norm(p, axis=1), np.linalg.norm(t, axis=1)
    both = (np_ == 0) & (nt == 0)
    one = (np_ == 0) ^ (nt == 0)
    denom = np.where((np_ > 0) & (nt > 0), np_ * nt, 1.0)
    sims = np.sum(p * t, axis=1) / denom
    sims = np.where(both, 1.0, np.where(one, 0.0, sims))
    return float(np.mean(sims))
