"""Execution-graph representation and its JSON + sidecar serialization.

A graph document is JSON::

    {"version": 1,
     "weights_file": "model.bin",
     "input_shape": [8],                 # optional, inferred from the entry node
     "nodes": [{"id": "fc1", "op": "matmul", "attrs": {}, "inputs": [],
                "output_shape": [16], "weights_ref": {"offset": 0, "count": 128,
                                                      "shape": [8, 16]}}, ...],
     "entry": "fc1", "exit": "sm"}

Weights live in a sidecar of little-endian float32 values, row-major.  ``offset``
and ``count`` are in elements, not bytes.  Matmul weights are stored ``(in, out)``
so one column is one output channel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Iterable, Mapping

import numpy as np

GRAPH_VERSION = 1

OP_TAGS = frozenset({
    "matmul", "bias_add", "tanh", "sigmoid", "relu", "mul_elementwise", "softmax",
    "squash", "sqrt_elementwise", "leaky_relu", "identity",
    # produced by rewrites: constant scale/shift and saturating clamp
    "affine", "clamp",
})

# ops whose output is a pure per-element function of one input
ELEMENTWISE = frozenset({
    "tanh", "sigmoid", "relu", "sqrt_elementwise", "leaky_relu", "identity", "affine",
    "clamp",
})


class GraphError(ValueError):
    """Raised for malformed graphs; ``node_ids`` names the offending nodes."""

    def __init__(self, message: str, node_ids: Iterable[str] = ()):
        self.node_ids = tuple(node_ids)
        if self.node_ids:
            message = f"{message} (nodes: {', '.join(self.node_ids)})"
        super().__init__(message)


@dataclass(frozen=True)
class TensorShape:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise GraphError(f"invalid tensor shape {list(self.dims)}")
        object.__setattr__(self, "dims", dims)

    @property
    def numel(self) -> int:
        return math.prod(self.dims)

    @property
    def last(self) -> int:
        return self.dims[-1]

    def __iter__(self):
        return iter(self.dims)

    def __repr__(self):
        return f"TensorShape({list(self.dims)})"


@dataclass(frozen=True)
class OpKind:
    tag: str
    attrs: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.tag not in OP_TAGS:
            raise GraphError(f"unknown op kind {self.tag!r}")
        object.__setattr__(self, "attrs", MappingProxyType(dict(self.attrs)))
        if self.tag == "leaky_relu":
            alpha = self.attrs.get("alpha")
            if alpha is None or not 0.0 < float(alpha) < 1.0:
                raise GraphError(f"leaky_relu needs 0 < alpha < 1, got {alpha!r}")
        if self.tag == "softmax" and int(self.attrs.get("d", 0)) < 1:
            raise GraphError("softmax needs a positive 'd' attribute")
        if self.tag == "squash" and int(self.attrs.get("width", 0)) < 1:
            raise GraphError("squash needs a positive 'width' attribute")
        if self.tag == "clamp":
            lo, hi = self.attrs.get("lo"), self.attrs.get("hi")
            if lo is None or hi is None or not float(lo) <= float(hi):
                raise GraphError(f"clamp needs lo <= hi, got {lo!r}, {hi!r}")

    def to_dict(self) -> dict:
        return {"op": self.tag, "attrs": _plain(self.attrs)}

    def __hash__(self):
        return hash((self.tag, tuple(sorted(_plain(self.attrs).items(), key=str))))

    def __eq__(self, other):
        return (isinstance(other, OpKind) and self.tag == other.tag
                and _plain(self.attrs) == _plain(other.attrs))

    def invocation_size(self) -> int:
        """Elements consumed by one call of the underlying subroutine."""
        if self.tag == "softmax":
            return int(self.attrs["d"])
        if self.tag == "squash":
            return int(self.attrs["width"])
        return 1


@dataclass(frozen=True, eq=False)
class GraphNode:
    id: str
    op: OpKind
    inputs: tuple[str, ...]
    output_shape: TensorShape
    weights: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if self.weights is not None:
            w = np.array(self.weights, dtype=np.float64)
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    @property
    def tag(self) -> str:
        return self.op.tag

    @property
    def attrs(self) -> Mapping[str, Any]:
        return self.op.attrs


class ExecutionGraph:
    """Validated, immutable DAG of :class:`GraphNode`.

    Nodes with no inputs consume the graph input; exactly one such node is allowed
    and it must be ``entry``.
    """

    def __init__(self, nodes: Iterable[GraphNode], entry: str, exit: str,
                 input_shape: Iterable[int] | None = None):
        nodes = list(nodes)
        seen: dict[str, GraphNode] = {}
        for n in nodes:
            if n.id in seen:
                raise GraphError("duplicate node id", [n.id])
            seen[n.id] = n
        self._nodes = MappingProxyType(seen)
        self.entry = entry
        self.exit = exit
        if nodes:
            if entry not in seen or exit not in seen:
                raise GraphError("entry/exit must name existing nodes",
                                 [x for x in (entry, exit) if x not in seen])
            self.input_shape = (TensorShape(tuple(input_shape)) if input_shape is not None
                                else _infer_input_shape(seen[entry]))
        else:
            self.input_shape = TensorShape(tuple(input_shape)) if input_shape else None
        self._order = _topological_order(seen)
        self._consumers: dict[str, list[str]] = {k: [] for k in seen}
        for nid in self._order:
            for src in seen[nid].inputs:
                self._consumers[src].append(nid)
        self._validate()

    # -- access ---------------------------------------------------------------
    @property
    def nodes(self) -> Mapping[str, GraphNode]:
        return self._nodes

    def __getitem__(self, node_id: str) -> GraphNode:
        return self._nodes[node_id]

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._nodes

    def __len__(self):
        return len(self._nodes)

    @property
    def order(self) -> tuple[str, ...]:
        return self._order

    def consumers(self, node_id: str) -> tuple[str, ...]:
        return tuple(self._consumers[node_id])

    def input_shape_of(self, node_id: str) -> TensorShape:
        node = self._nodes[node_id]
        if not node.inputs:
            return self.input_shape
        return self._nodes[node.inputs[0]].output_shape

    def replace(self, nodes: Iterable[GraphNode], entry: str | None = None,
                exit: str | None = None) -> "ExecutionGraph":
        return ExecutionGraph(nodes, entry or self.entry, exit or self.exit,
                              self.input_shape.dims if self.input_shape else None)

    # -- validation -----------------------------------------------------------
    def _validate(self):
        sources = [nid for nid in self._order if not self._nodes[nid].inputs]
        if len(sources) > 1:
            raise GraphError("only the entry node may lack inputs", sources)
        if sources and sources[0] != self.entry:
            raise GraphError("node without inputs is not the entry", sources)
        for nid in self._order:
            node = self._nodes[nid]
            if len(node.inputs) > 1:
                in_shapes = [self._nodes[i].output_shape for i in node.inputs]
            else:
                in_shapes = [self.input_shape_of(nid)]
            _check_node(node, in_shapes)


def _plain(attrs: Mapping[str, Any]) -> dict:
    return {k: (v.item() if isinstance(v, np.generic) else v) for k, v in attrs.items()}


def _infer_input_shape(node: GraphNode) -> TensorShape:
    if node.tag == "matmul":
        if node.weights is None or node.weights.ndim != 2:
            raise GraphError("matmul needs a 2-D weight payload", [node.id])
        return TensorShape(node.output_shape.dims[:-1] + (node.weights.shape[0],))
    return node.output_shape


def _topological_order(nodes: Mapping[str, GraphNode]) -> tuple[str, ...]:
    for n in nodes.values():
        missing = [i for i in n.inputs if i not in nodes]
        if missing:
            raise GraphError(f"dangling input {missing[0]!r}", [n.id])
    # Kahn's algorithm; ties broken by declaration order for determinism
    indeg = {k: len(n.inputs) for k, n in nodes.items()}
    users: dict[str, list[str]] = {k: [] for k in nodes}
    for k, n in nodes.items():
        for i in n.inputs:
            users[i].append(k)
    position = {k: i for i, k in enumerate(nodes)}
    ready = sorted((k for k, d in indeg.items() if d == 0), key=position.get)
    order = []
    while ready:
        k = ready.pop(0)
        order.append(k)
        for u in users[k]:
            indeg[u] -= 1
            if indeg[u] == 0:
                ready.append(u)
                ready.sort(key=position.get)
    if len(order) != len(nodes):
        raise GraphError("cycle detected", sorted(k for k, d in indeg.items() if d > 0))
    return tuple(order)


def _check_node(node: GraphNode, in_shapes: list[TensorShape]):
    tag, out = node.tag, node.output_shape
    nid = [node.id]
    if tag == "mul_elementwise":
        if len(node.inputs) != 2:
            raise GraphError("mul_elementwise takes two inputs", nid)
        if in_shapes[0] != in_shapes[1] or in_shapes[0] != out:
            raise GraphError("shape mismatch in mul_elementwise", nid)
        return
    if len(node.inputs) > 1:
        raise GraphError(f"{tag} takes one input", nid)
    (x,) = in_shapes
    if tag == "matmul":
        w = node.weights
        if w is None or w.ndim != 2:
            raise GraphError("matmul needs a 2-D weight payload", nid)
        if x.last != w.shape[0]:
            raise GraphError(f"shape mismatch: input last dim {x.last} vs weight "
                             f"rows {w.shape[0]}", nid)
        if out.dims != x.dims[:-1] + (w.shape[1],):
            raise GraphError(f"shape mismatch: output {list(out)} vs expected "
                             f"{list(x.dims[:-1] + (w.shape[1],))}", nid)
    elif tag == "bias_add":
        w = node.weights
        if w is None or w.ndim != 1 or w.shape[0] != x.last or out != x:
            raise GraphError("shape mismatch in bias_add", nid)
    elif tag in ("softmax", "squash"):
        size = node.op.invocation_size()
        if x.last != size or out != x:
            raise GraphError(f"{tag} attribute {size} does not match shape {list(x)}", nid)
    elif tag in ELEMENTWISE:
        # elementwise ops may also reshape (same element count)
        if x.numel != out.numel:
            raise GraphError("shape mismatch: element count changes", nid)
    if tag not in ("matmul", "bias_add") and node.weights is not None:
        raise GraphError(f"{tag} does not take weights", nid)


# -- serialization ---------------------------------------------------------------

def load_graph(source: str | Path | Mapping, weights: bytes | str | Path | None = None
               ) -> ExecutionGraph:
    """Load and validate a graph document.

    ``source`` is a path to the JSON document or an already-parsed mapping.  The
    sidecar is resolved relative to the document unless ``weights`` is given.
    """
    base = None
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise GraphError(f"schema violation: not JSON ({exc})") from exc
        base = path.parent
    else:
        doc = dict(source)
    _check_schema(doc)
    blob = None
    if isinstance(weights, (bytes, bytearray)):
        blob = np.frombuffer(bytes(weights), dtype="<f4")
    elif weights is not None or doc.get("weights_file"):
        wpath = Path(weights) if weights is not None else Path(doc["weights_file"])
        if base is not None and not wpath.is_absolute():
            wpath = base / wpath
        if not wpath.exists():
            raise GraphError(f"weights sidecar not found: {wpath}")
        blob = np.fromfile(wpath, dtype="<f4")
    nodes = []
    for raw in doc["nodes"]:
        w = None
        ref = raw.get("weights_ref")
        if ref is not None:
            if blob is None:
                raise GraphError("weights_ref without a weights sidecar", [raw["id"]])
            off, count = int(ref["offset"]), int(ref["count"])
            if off < 0 or off + count > blob.size:
                raise GraphError("weights_ref outside sidecar", [raw["id"]])
            w = blob[off:off + count].astype(np.float64)
            shape = tuple(ref.get("shape", (count,)))
            if math.prod(shape) != count:
                raise GraphError("weights_ref shape/count mismatch", [raw["id"]])
            w = w.reshape(shape)
        try:
            op = OpKind(raw["op"], raw.get("attrs", {}))
            shape = TensorShape(tuple(raw["output_shape"]))
        except GraphError as exc:
            raise GraphError(str(exc), [raw["id"]]) from None
        nodes.append(GraphNode(raw["id"], op, tuple(raw.get("inputs", ())), shape, w))
    return ExecutionGraph(nodes, doc["entry"], doc["exit"], doc.get("input_shape"))


def _check_schema(doc: Mapping):
    for key in ("version", "nodes", "entry", "exit"):
        if key not in doc:
            raise GraphError(f"schema violation: missing {key!r}")
    if doc["version"] != GRAPH_VERSION:
        raise GraphError(f"schema violation: unsupported version {doc['version']!r}")
    if not isinstance(doc["nodes"], list):
        raise GraphError("schema violation: 'nodes' must be a list")
    for i, raw in enumerate(doc["nodes"]):
        if not isinstance(raw, Mapping):
            raise GraphError(f"schema violation: node #{i} is not an object")
        for key in ("id", "op", "output_shape"):
            if key not in raw:
                raise GraphError(f"schema violation: node #{i} missing {key!r}",
                                 [str(raw.get("id", f"#{i}"))])


def graph_to_document(g: ExecutionGraph, weights_file: str = "weights.bin"
                      ) -> tuple[dict, bytes]:
    """Serialize to (document, sidecar bytes)."""
    chunks, offset, nodes = [], 0, []
    for nid in g.order:
        n = g[nid]
        raw = {"id": n.id, "op": n.tag, "attrs": _plain(n.attrs), "inputs": list(n.inputs),
               "output_shape": list(n.output_shape.dims)}
        if n.weights is not None:
            flat = np.ascontiguousarray(n.weights, dtype="<f4").ravel()
            raw["weights_ref"] = {"offset": offset, "count": int(flat.size),
                                  "shape": list(n.weights.shape)}
            chunks.append(flat.tobytes())
            offset += flat.size
        else:
            raw["weights_ref"] = None
        nodes.append(raw)
    doc = {"version": GRAPH_VERSION, "weights_file": weights_file,
           "input_shape": list(g.input_shape.dims) if g.input_shape else None,
           "nodes": nodes, "entry": g.entry, "exit": g.exit}
    return doc, b"".join(chunks)


def save_graph(g: ExecutionGraph, path: str | Path) -> Path:
    path = Path(path)
    sidecar = path.with_suffix(".bin")
    doc, blob = graph_to_document(g, sidecar.name)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True))
    sidecar.write_bytes(blob)
    return path
