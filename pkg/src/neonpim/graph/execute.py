"""Exact float64 forward execution with per-node capture."""

from __future__ import annotations

import numpy as np

from .ir import ExecutionGraph, GraphError
from . import ops


class NumericalOverflow(ArithmeticError):
    """A node produced a non-finite value."""

    def __init__(self, node_id: str, detail: str = "non-finite output"):
        self.node_id = node_id
        super().__init__(f"{detail} at node {node_id!r}")


def _as_batch(g: ExecutionGraph, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    dims = g.input_shape.dims
    if x.shape == dims:
        return x[None], False
    if x.shape[1:] == dims:
        return x, True
    raise GraphError(f"input shape {list(x.shape)} does not match graph input {list(dims)}",
                     [g.entry])


def execute_reference(g: ExecutionGraph, x: np.ndarray
                      ) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Run the graph on ``x`` (one sample or a leading batch axis).

    Returns ``{node_id: (input, output)}`` for every node; for two-input nodes the
    recorded input is the first operand.  Arrays keep the batch axis only if the
    caller passed one.
    """
    xb, batched = _as_batch(g, x)
    values: dict[str, np.ndarray] = {}
    record: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for nid in g.order:
        node = g[nid]
        xs = [values[i] for i in node.inputs] if node.inputs else [xb]
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            y = ops.forward(node.tag, node.attrs, xs, node.weights, node.output_shape.dims)
        if not np.all(np.isfinite(y)):
            raise NumericalOverflow(nid)
        values[nid] = y
        record[nid] = (xs[0], y) if batched else (xs[0][0], y[0])
    return record


def run(g: ExecutionGraph, x: np.ndarray) -> np.ndarray:
    """Graph output only."""
    return execute_reference(g, x)[g.exit][1]
