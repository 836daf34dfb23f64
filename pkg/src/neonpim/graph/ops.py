"""Reference float64 kernels and their vector-Jacobian products.

Every kernel takes a batch: arrays shaped ``(batch, *tensor_dims)``.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np


def softmax(x: np.ndarray) -> np.ndarray:
    # max-subtraction keeps exp finite for large logits
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def squash(v: np.ndarray) -> np.ndarray:
    """Capsule squash ``|v|^2/(1+|v|^2) * v/|v|`` along the last axis, 0 at v=0."""
    n2 = np.sum(v * v, axis=-1, keepdims=True)
    n = np.sqrt(n2)
    safe = np.where(n > 0, n, 1.0)
    return np.where(n > 0, (n2 / (1.0 + n2)) * v / safe, 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def leaky_relu(x: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(x > 0, x, alpha * x)


def forward(tag: str, attrs: Mapping, xs: list[np.ndarray], weights: np.ndarray | None,
            out_shape: tuple[int, ...]) -> np.ndarray:
    """Evaluate one node on a batch; ``out_shape`` excludes the batch axis."""
    x = xs[0]
    batch = x.shape[0]
    if tag == "matmul":
        y = x @ weights
    elif tag == "bias_add":
        y = x + weights
    elif tag == "mul_elementwise":
        y = xs[0] * xs[1]
    elif tag == "tanh":
        y = np.tanh(x)
    elif tag == "sigmoid":
        y = sigmoid(x)
    elif tag == "relu":
        y = np.maximum(x, 0.0)
    elif tag == "leaky_relu":
        y = leaky_relu(x, float(attrs["alpha"]))
    elif tag == "sqrt_elementwise":
        with np.errstate(invalid="ignore"):
            y = np.sqrt(x)
    elif tag == "softmax":
        y = softmax(x)
    elif tag == "squash":
        y = squash(x)
    elif tag == "identity":
        y = x.copy()
    elif tag == "affine":
        y = float(attrs.get("scale", 1.0)) * x + float(attrs.get("shift", 0.0))
    elif tag == "clamp":
        y = np.clip(x, float(attrs["lo"]), float(attrs["hi"]))
    else:
        raise ValueError(f"unknown op kind {tag!r}")
    return y.reshape((batch,) + tuple(out_shape))


def softmax_vjp(y: np.ndarray, g: np.ndarray) -> np.ndarray:
    return y * (g - np.sum(g * y, axis=-1, keepdims=True))


def squash_vjp(v: np.ndarray, g: np.ndarray) -> np.ndarray:
    # s = c(n) v with c(n) = n/(1+n^2); ds/dv = c I + (c'(n)/n) v v^T
    n2 = np.sum(v * v, axis=-1, keepdims=True)
    n = np.sqrt(n2)
    safe = np.where(n > 0, n, 1.0)
    c = n / (1.0 + n2)
    dc_over_n = ((1.0 - n2) / (1.0 + n2) ** 2) / safe
    gv = np.sum(g * v, axis=-1, keepdims=True)
    return np.where(n > 0, c * g + dc_over_n * gv * v, 0.0)


def vjp(tag: str, attrs: Mapping, xs: list[np.ndarray], y: np.ndarray, g: np.ndarray,
        weights: np.ndarray | None) -> tuple[list[np.ndarray], np.ndarray | None]:
    """Return (grads w.r.t. each input, grad w.r.t. weights or None).

    ``g`` has the node's output shape; input grads are reshaped to input shapes.
    """
    x = xs[0]
    gw = None
    if tag == "matmul":
        x2 = x.reshape(-1, weights.shape[0])
        g2 = g.reshape(-1, weights.shape[1])
        gw = x2.T @ g2
        gx = [(g2 @ weights.T).reshape(x.shape)]
        return gx, gw
    if tag == "bias_add":
        gw = g.reshape(-1, weights.shape[0]).sum(axis=0)
        return [g.copy()], gw
    if tag == "mul_elementwise":
        return [g * xs[1], g * xs[0]], None
    gy = g.reshape(x.shape)
    yy = y.reshape(x.shape)
    if tag == "tanh":
        gx = gy * (1.0 - yy * yy)
    elif tag == "sigmoid":
        gx = gy * yy * (1.0 - yy)
    elif tag == "relu":
        gx = gy * (x > 0)
    elif tag == "leaky_relu":
        gx = gy * np.where(x > 0, 1.0, float(attrs["alpha"]))
    elif tag == "sqrt_elementwise":
        gx = gy * 0.5 / yy
    elif tag == "softmax":
        gx = softmax_vjp(yy, gy)
    elif tag == "squash":
        gx = squash_vjp(x, gy)
    elif tag == "identity":
        gx = gy.copy()
    elif tag == "affine":
        gx = gy * float(attrs.get("scale", 1.0))
    elif tag == "clamp":
        gx = gy * ((x >= float(attrs["lo"])) & (x <= float(attrs["hi"])))
    else:
        raise ValueError(f"unknown op kind {tag!r}")
    return [gx], None
