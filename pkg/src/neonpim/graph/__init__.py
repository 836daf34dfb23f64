from .ir import (ExecutionGraph, GraphError, GraphNode, OpKind, TensorShape, load_graph,
                 save_graph, graph_to_document)
from .execute import NumericalOverflow, execute_reference, run
from .classify import classify_nodes, classify_op

__all__ = [
    "ExecutionGraph", "GraphError", "GraphNode", "OpKind", "TensorShape", "load_graph",
    "save_graph", "graph_to_document", "NumericalOverflow", "execute_reference", "run",
    "classify_nodes", "classify_op",
]
