"""Post-transform fine-tuning of the workload layers that touch each NEON-Net.

Forward runs through the NEON-Nets; backward pulls gradients through the exact
replaced function, evaluated at the NEON-Net's input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..graph.execute import execute_reference, run
from ..graph.grad import backward
from ..graph.ir import ExecutionGraph, GraphNode, OpKind
from ..nn.optim import ArrayAdam
from .rewrite import GROUP, neon_groups

PROB_FLOOR = 1e-7


def accuracy(g: ExecutionGraph, x: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(np.argmax(run(g, x), axis=-1) == labels))


def cross_entropy(p: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean negative log of the labelled probability (floored) and its gradient."""
    picked = p[np.arange(len(labels)), labels]
    safe = np.maximum(picked, PROB_FLOOR)
    grad = np.zeros_like(p)
    grad[np.arange(len(labels)), labels] = np.where(picked > PROB_FLOOR,
                                                    -1.0 / (safe * len(labels)), 0.0)
    return float(-np.mean(np.log(safe))), grad


def original_op(g: ExecutionGraph, group: str) -> OpKind:
    attrs = g[group].attrs
    orig = {k[len("orig_"):]: v for k, v in attrs.items() if k.startswith("orig_")}
    return OpKind(attrs["neon_op"], orig)


def _layer_of(g: ExecutionGraph, nid: str) -> list[str]:
    """A workload layer: a matmul plus the bias_add directly after it, if any."""
    node = g[nid]
    if node.tag == "bias_add":
        src = node.inputs[0]
        return [src, nid] if g[src].tag == "matmul" and GROUP not in g[src].attrs else [nid]
    users = [u for u in g.consumers(nid) if g[u].tag == "bias_add"]
    return [nid] + users[:1]


def adjacent_layers(g: ExecutionGraph, group: str, members: list[str]) -> list[str]:
    """Nearest weighted workload layer before and after one NEON-Net."""
    found: list[str] = []
    # upstream from the NEON-Net input
    cur = g[members[0]].inputs
    while cur:
        nid = cur[0]
        node = g[nid]
        if node.tag in ("matmul", "bias_add") and GROUP not in node.attrs:
            found += _layer_of(g, nid)
            break
        cur = node.inputs
    # downstream from the NEON-Net output
    cur = g.consumers(group)
    while cur:
        nid = cur[0]
        node = g[nid]
        if node.tag in ("matmul", "bias_add") and GROUP not in node.attrs:
            found += _layer_of(g, nid)
            break
        cur = g.consumers(nid)
    return found


@dataclass
class FineTuneResult:
    graph: ExecutionGraph
    accuracy_original: float
    accuracy_transformed: float
    accuracy_finetuned: float
    trainable: list[str]
    losses: list[float]

    @property
    def delta(self) -> float:
        """Accuracy change of the fine-tuned graph versus the original, in points."""
        return 100.0 * (self.accuracy_finetuned - self.accuracy_original)


def fine_tune(g_transformed: ExecutionGraph, original: ExecutionGraph, x: np.ndarray,
              labels: np.ndarray, epochs: int = 10, learning_rate: float = 1e-3,
              batch_size: int = 64, seed: int = 0, x_eval: np.ndarray | None = None,
              labels_eval: np.ndarray | None = None) -> FineTuneResult:
    """Train only the layers adjacent to NEON-Nets; everything else stays frozen."""
    x = np.asarray(x, np.float64)
    labels = np.asarray(labels)
    if x_eval is None:
        x_eval, labels_eval = x, labels
    groups = neon_groups(g_transformed)
    trainable: list[str] = []
    for grp, members in groups.items():
        for nid in adjacent_layers(g_transformed, grp, members):
            if nid not in trainable:
                trainable.append(nid)
    surrogates = {grp: (members[0], original_op(g_transformed, grp))
                  for grp, members in groups.items()}
    acc_orig = accuracy(original, x_eval, labels_eval)
    acc_tr = accuracy(g_transformed, x_eval, labels_eval)
    g = g_transformed
    opt = ArrayAdam(learning_rate)
    rng = np.random.default_rng(seed)
    losses = []
    for _ in range(epochs):
        perm = rng.permutation(len(x))
        total = 0.0
        for start in range(0, len(x), batch_size):
            idx = perm[start:start + batch_size]
            rec = execute_reference(g, x[idx])
            loss, gout = cross_entropy(rec[g.exit][1], labels[idx])
            total += loss * len(idx)
            wg = backward(g, rec, gout, surrogates)
            params = {k: np.array(g[k].weights) for k in trainable}
            new = opt.update(params, {k: wg[k] for k in trainable})
            g = g.replace([_with_weights(g[n], new[n]) if n in new else g[n] for n in g.order])
        losses.append(total / len(x))
    return FineTuneResult(g, acc_orig, acc_tr, accuracy(g, x_eval, labels_eval), trainable,
                          losses)


def _with_weights(node: GraphNode, w: np.ndarray) -> GraphNode:
    return GraphNode(node.id, node.op, node.inputs, node.output_shape, w)
