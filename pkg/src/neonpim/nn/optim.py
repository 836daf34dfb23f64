"""Adam with L2 weight decay folded into the gradient."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fcnet import FcNet, ShapeError

BETA1 = 0.9
BETA2 = 0.999
EPS_ADAM = 1e-8


@dataclass
class AdamState:
    m: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    v: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    step: int = 0

    @classmethod
    def for_net(cls, net: FcNet) -> "AdamState":
        zeros = [(np.zeros_like(l.weight), np.zeros_like(l.bias)) for l in net.layers]
        return cls([(w.copy(), b.copy()) for w, b in zeros],
                   [(w.copy(), b.copy()) for w, b in zeros], 0)


def adam_step(net: FcNet, grads, state: AdamState, learning_rate: float,
              weight_decay: float = 0.0) -> None:
    """One in-place Adam update with bias correction; frozen layers are skipped."""
    if len(state.m) != len(net.layers):
        raise ShapeError("optimizer state does not match the network")
    state.step += 1
    t = state.step
    c1 = 1.0 - BETA1 ** t
    c2 = 1.0 - BETA2 ** t
    for k, layer in enumerate(net.layers):
        if layer.frozen:
            continue
        for j, name in enumerate(("weight", "bias")):
            p = getattr(layer, name)
            g = grads[k][j]
            if g.shape != p.shape or state.m[k][j].shape != p.shape:
                raise ShapeError(f"gradient shape {g.shape} vs parameter {p.shape}")
            if weight_decay:
                g = g + weight_decay * p
            m, v = state.m[k][j], state.v[k][j]
            m *= BETA1
            m += (1.0 - BETA1) * g
            v *= BETA2
            v += (1.0 - BETA2) * g * g
            p -= learning_rate * (m / c1) / (np.sqrt(v / c2) + EPS_ADAM)


class ArrayAdam:
    """Adam over a dict of named arrays (used for graph weights)."""

    def __init__(self, learning_rate: float, weight_decay: float = 0.0):
        self.lr, self.wd = learning_rate, weight_decay
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step = 0

    def update(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]
               ) -> dict[str, np.ndarray]:
        self.step += 1
        c1, c2 = 1.0 - BETA1 ** self.step, 1.0 - BETA2 ** self.step
        out = {}
        for k, p in params.items():
            g = grads[k] + self.wd * p if self.wd else grads[k]
            m = self.m.setdefault(k, np.zeros_like(p))
            v = self.v.setdefault(k, np.zeros_like(p))
            m *= BETA1
            m += (1.0 - BETA1) * g
            v *= BETA2
            v += (1.0 - BETA2) * g * g
            out[k] = p - self.lr * (m / c1) / (np.sqrt(v / c2) + EPS_ADAM)
        return out
