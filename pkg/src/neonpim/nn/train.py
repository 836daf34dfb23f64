"""Mini-batch training loop."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .fcnet import FcNet, backward, forward, mse
from .optim import AdamState, adam_step


@dataclass(frozen=True)
class TrainConfig:
    epsilon: float = 1e-4
    max_layers: int = 100
    num_epochs: int = 100
    batch_size: int = 1024
    learning_rate: float = 1e-4
    weight_decay: float = 1e-4
    seed: int = 0
    xbar_size: int = 128

    def __post_init__(self):
        if self.max_layers < 1 or self.num_epochs < 1 or self.batch_size < 1:
            raise ValueError("max_layers, num_epochs and batch_size must be positive")
        if self.learning_rate <= 0 or self.weight_decay < 0 or self.xbar_size < 1:
            raise ValueError("invalid learning rate, weight decay or xbar size")

    @classmethod
    def desk(cls, **overrides) -> "TrainConfig":
        """Profile for tens of thousands of rows on one CPU core.

        With ~50k rows the default batch gives only ~45 steps per epoch, too few
        for the default learning rate to reach the MSE target in 100 epochs.
        """
        base = dict(learning_rate=1e-3, batch_size=256, weight_decay=0.0)
        base.update(overrides)
        return cls(**base)

    def with_(self, **kw) -> "TrainConfig":
        return replace(self, **kw)


@dataclass
class TrainResult:
    net: FcNet
    losses: list[float] = field(default_factory=list)
    val_mse: float = float("nan")


def split_dataset(x: np.ndarray, y: np.ndarray, seed: int, val_fraction: float = 0.1):
    """Seeded shuffle then a 90/10 train/validation split."""
    n = len(x)
    perm = np.random.default_rng(seed).permutation(n)
    n_val = max(1, int(round(n * val_fraction))) if n > 1 else 0
    val, tr = perm[:n_val], perm[n_val:]
    return x[tr], y[tr], x[val], y[val]


def train(net: FcNet, x: np.ndarray, y: np.ndarray, cfg: TrainConfig,
          state: AdamState | None = None) -> TrainResult:
    """Train ``net`` in place; returns the per-epoch train loss and validation MSE.

    A training split smaller than one batch is trained as a single full batch.
    """
    x = np.asarray(x, np.float64).reshape(len(x), -1)
    y = np.asarray(y, np.float64).reshape(len(y), -1)
    xt, yt, xv, yv = split_dataset(x, y, cfg.seed)
    if len(xt) == 0:
        xt, yt = xv, yv
    rng = np.random.default_rng([cfg.seed, 1])
    state = state or AdamState.for_net(net)
    bs = min(cfg.batch_size, len(xt))
    losses = []
    for _ in range(cfg.num_epochs):
        perm = rng.permutation(len(xt))
        total = 0.0
        for start in range(0, len(xt), bs):
            idx = perm[start:start + bs]
            pred, cache = forward(net, xt[idx])
            d = pred - yt[idx]
            total += float(np.sum(d * d))
            grads, _ = backward(net, cache, truth=yt[idx])
            adam_step(net, grads, state, cfg.learning_rate, cfg.weight_decay)
        losses.append(total / yt.size)
    val = mse(forward(net, xv)[0], yv) if len(xv) else losses[-1]
    return TrainResult(net, losses, val)
