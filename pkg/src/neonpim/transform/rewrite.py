"""Graph rewrites: candidate delineation, sigmoid-via-tanh, NEON-Net splicing.

A spliced NEON-Net keeps the replaced node's id on its final clamp, so consumers
are untouched.  Every emitted node carries ``neon_group`` (the replaced id) and
``neon_op`` attributes; the mapper uses them to give each net its own tiles.
"""

from __future__ import annotations

import numpy as np

from ..graph.classify import IDENTITY_REWRITE, TRANSFORM_CANDIDATE, classify_nodes
from ..graph.ir import ExecutionGraph, GraphError, GraphNode, OpKind, TensorShape
from .grow import NeonNet

GROUP = "neon_group"


def is_neon_internal(node: GraphNode) -> bool:
    return GROUP in node.attrs


def delineate(g: ExecutionGraph, hw=None) -> list[str]:
    """Ids of nodes to replace by NEON-Nets, in execution order."""
    cls = classify_nodes(g, hw)
    return [nid for nid in g.order
            if cls[nid] == TRANSFORM_CANDIDATE and not is_neon_internal(g[nid])]


def identity_rewrites(g: ExecutionGraph, hw=None) -> list[str]:
    cls = classify_nodes(g, hw)
    return [nid for nid in g.order if cls[nid] == IDENTITY_REWRITE]


def _swap(g: ExecutionGraph, node_id: str, new_nodes: list[GraphNode]) -> ExecutionGraph:
    nodes = []
    for nid in g.order:
        if nid == node_id:
            nodes.extend(new_nodes)
        else:
            nodes.append(g[nid])
    entry = new_nodes[0].id if node_id == g.entry else g.entry
    return g.replace(nodes, entry=entry)


def rewrite_sigmoid(g: ExecutionGraph) -> ExecutionGraph:
    """sigmoid(z) = 0.5 * tanh(0.5 * z) + 0.5 for every sigmoid node."""
    for nid in [n for n in g.order if g[n].tag == "sigmoid"]:
        node = g[nid]
        shape = node.output_shape
        mark = {"rewritten_from": "sigmoid"}
        new = [
            GraphNode(f"{nid}/half", OpKind("affine", {"scale": 0.5, "shift": 0.0, **mark}),
                      node.inputs, shape),
            GraphNode(f"{nid}/tanh", OpKind("tanh", mark), (f"{nid}/half",), shape),
            GraphNode(nid, OpKind("affine", {"scale": 0.5, "shift": 0.5, **mark}),
                      (f"{nid}/tanh",), shape),
        ]
        g = _swap(g, nid, new)
    return g


def apply_replacement(g: ExecutionGraph, node_id: str, neon: NeonNet) -> ExecutionGraph:
    """Splice ``clamp_in -> (matmul, bias, tanh)* -> matmul, bias -> clamp_out``."""
    node = g[node_id]
    width = node.op.invocation_size()
    in_shape = g.input_shape_of(node_id)
    if neon.dims != (width, width):
        raise GraphError(f"NEON-Net dims {neon.dims} do not match invocation size {width}",
                         [node_id])
    if in_shape.numel % width:
        raise GraphError("input does not split into whole invocations", [node_id])
    rows = in_shape.dims[:-1] if width > 1 else (in_shape.numel,)
    row_shape = lambda n: TensorShape(tuple(rows) + (n,))
    base = {GROUP: node_id, "neon_op": node.tag,
            **{f"orig_{k}": v for k, v in node.attrs.items()}}
    b = neon.bounds
    new = [GraphNode(f"{node_id}/clamp_in",
                     OpKind("clamp", {"lo": b.input_min, "hi": b.input_max, **base,
                                      "role": "clamp_in"}),
                     node.inputs, row_shape(width))]
    prev = f"{node_id}/clamp_in"
    last = len(neon.net.layers) - 1
    for k, layer in enumerate(neon.net.layers):
        attrs = {**base, "layer": k}
        mm, ba = f"{node_id}/l{k}/matmul", f"{node_id}/l{k}/bias"
        new.append(GraphNode(mm, OpKind("matmul", attrs), (prev,), row_shape(layer.out_dim),
                             np.asarray(layer.weight).T))
        new.append(GraphNode(ba, OpKind("bias_add", attrs), (mm,), row_shape(layer.out_dim),
                             np.asarray(layer.bias)))
        prev = ba
        if k < last:
            act = f"{node_id}/l{k}/tanh"
            if layer.activation != "tanh":
                raise GraphError(f"hidden activation {layer.activation!r} has no unit",
                                 [node_id])
            new.append(GraphNode(act, OpKind("tanh", attrs), (ba,), row_shape(layer.out_dim)))
            prev = act
    new.append(GraphNode(node_id, OpKind("clamp", {"lo": b.output_min, "hi": b.output_max,
                                                   **base, "role": "clamp_out"}),
                         (prev,), node.output_shape))
    return _swap(g, node_id, new)


def neon_groups(g: ExecutionGraph) -> dict[str, list[str]]:
    """Replaced node id -> ids of the nodes that now implement it, in order."""
    groups: dict[str, list[str]] = {}
    for nid in g.order:
        grp = g[nid].attrs.get(GROUP)
        if grp is not None:
            groups.setdefault(grp, []).append(nid)
    return groups
