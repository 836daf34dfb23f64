"""Reverse-mode gradients over an executed graph."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from . import ops
from .ir import ExecutionGraph, OpKind


def backward(g: ExecutionGraph, record: Mapping[str, tuple[np.ndarray, np.ndarray]],
             grad_out: np.ndarray,
             surrogates: Mapping[str, tuple[str, OpKind]] | None = None
             ) -> dict[str, np.ndarray]:
    """Weight gradients for every matmul/bias_add node reached from the exit.

    ``record`` comes from a batched :func:`execute_reference`.  ``surrogates``
    maps a node id ``out`` to ``(entry_node, op)``: the gradient arriving at
    ``out`` is pulled back through ``op``'s exact VJP, evaluated at the value that
    entered ``entry_node``, and delivered straight to ``entry_node``'s input.
    Nodes strictly between the two receive no gradient.
    """
    surrogates = dict(surrogates or {})
    grads: dict[str, np.ndarray] = {g.exit: np.asarray(grad_out, np.float64)}
    weight_grads: dict[str, np.ndarray] = {}

    def push(node_id: str, gx: np.ndarray):
        if node_id in grads:
            grads[node_id] = grads[node_id] + gx
        else:
            grads[node_id] = gx

    for nid in reversed(g.order):
        if nid not in grads:
            continue
        gy = grads.pop(nid)
        node = g[nid]
        if nid in surrogates:
            entry, op = surrogates[nid]
            x = record[entry][0]
            shape = x.shape[1:]
            y = ops.forward(op.tag, op.attrs, [x], None, shape)
            (gx,), _ = ops.vjp(op.tag, op.attrs, [x], y, gy.reshape(y.shape), None)
            for src in g[entry].inputs:
                push(src, gx.reshape(record[src][1].shape))
            continue
        if len(node.inputs) > 1:
            xs = [record[i][1] for i in node.inputs]
        else:
            xs = [record[nid][0]]
        y = record[nid][1]
        gxs, gw = ops.vjp(node.tag, node.attrs, xs, y, gy, node.weights)
        if gw is not None:
            weight_grads[nid] = gw
        for src, gx in zip(node.inputs, gxs):
            push(src, gx.reshape(record[src][1].shape))
    return weight_grads
