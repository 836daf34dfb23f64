"""Hidden-activation grid search on a fixed one-hidden-layer structure."""

from __future__ import annotations

import numpy as np

from ..nn.fcnet import build_net
from ..nn.train import TrainConfig, train
from .datasets import CaptureDataset

CANDIDATES = ("tanh", "relu", "sigmoid")


def activation_grid_search(dataset: CaptureDataset, cfg: TrainConfig,
                           candidates=CANDIDATES, hidden: int = 1
                           ) -> list[tuple[str, float]]:
    """Train one net per activation with the same seed and split; sorted by MSE."""
    results = []
    for act in candidates:
        rng = np.random.default_rng([cfg.seed, hidden])
        dims = [dataset.in_dim] + [cfg.xbar_size] * hidden + [dataset.out_dim]
        net = build_net(dims, rng, hidden_act=act)
        res = train(net, dataset.inputs, dataset.outputs, cfg)
        results.append((act, float(res.val_mse)))
    return sorted(results, key=lambda r: (r[1], r[0]))
