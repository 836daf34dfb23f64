import numpy as np
import pytest

from neonpim.graph.ir import ExecutionGraph, GraphNode, OpKind, TensorShape


def node(nid, tag, inputs, shape, weights=None, **attrs):
    return GraphNode(nid, OpKind(tag, attrs), tuple(inputs), TensorShape(tuple(shape)), weights)


def chain(*nodes):
    return ExecutionGraph(list(nodes), nodes[0].id, nodes[-1].id)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def mm_softmax(rng):
    """matmul(8->16) -> bias -> softmax(16) -> matmul(16->4)."""
    return chain(
        node("fc1", "matmul", [], (16,), rng.normal(size=(8, 16))),
        node("b1", "bias_add", ["fc1"], (16,), rng.normal(size=16)),
        node("sm", "softmax", ["b1"], (16,), d=16),
        node("fc2", "matmul", ["sm"], (4,), rng.normal(size=(16, 4))),
    )
