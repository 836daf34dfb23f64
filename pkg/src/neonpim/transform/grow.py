"""Structure growth: add tanh hidden layers until the validation MSE meets epsilon."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..graph.ir import OpKind
from ..nn.fcnet import FcNet, build_net
from ..nn.train import TrainConfig, train
from .bounds import BoundSpec, extract_bounds
from .datasets import CaptureDataset

log = logging.getLogger(__name__)


@dataclass
class GrowthReport:
    hidden_layers: int
    mse_validation: float
    epochs_run: int
    training_seconds: float
    converged: bool
    history: list[float] = field(default_factory=list)   # validation MSE per depth tried

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class NeonNet:
    net: FcNet
    bounds: BoundSpec
    replaced_op: OpKind
    report: GrowthReport

    @property
    def dims(self) -> tuple[int, int]:
        return self.net.in_dim, self.net.out_dim

    @property
    def converged(self) -> bool:
        return self.report.converged


def grow_structure(dataset: CaptureDataset, cfg: TrainConfig, op: OpKind | None = None
                   ) -> NeonNet:
    """Start with one hidden layer; while the validation MSE exceeds epsilon, add a
    layer, re-initialize every weight and the optimizer, and retrain.

    Stops at ``cfg.max_layers`` hidden layers with ``converged=False``.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if op is None:
        op = OpKind(dataset.op["op"], dataset.op.get("attrs", {})) if dataset.op \
            else OpKind("identity")
    t0 = time.perf_counter()
    history, epochs = [], 0
    hidden = 1
    while True:
        rng = np.random.default_rng([cfg.seed, hidden])
        dims = [dataset.in_dim] + [cfg.xbar_size] * hidden + [dataset.out_dim]
        net = build_net(dims, rng)
        res = train(net, dataset.inputs, dataset.outputs, cfg)
        epochs += cfg.num_epochs
        history.append(res.val_mse)
        log.info("%s: %d hidden layer(s), validation MSE %.3g", dataset.source, hidden,
                 res.val_mse)
        converged = res.val_mse <= cfg.epsilon
        if converged or hidden >= cfg.max_layers:
            break
        hidden += 1
    report = GrowthReport(hidden, float(res.val_mse), epochs, time.perf_counter() - t0,
                          bool(converged), history)
    return NeonNet(net, extract_bounds(dataset), op, report)
