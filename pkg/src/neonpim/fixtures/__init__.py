"""Seeded fixture graphs.

``capsule-mini``: matmul -> squash(8) -> matmul -> softmax(16) over 64 capsules.
``attn-mini``: matmul -> softmax(64) -> matmul -> sigmoid over 128 tokens.
``toy-clf`` / ``toy-caps``: small 3-class classifiers on 2-D Gaussian blobs with
a tanh or squash hidden layer and a softmax head.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..graph.execute import execute_reference
from ..graph.grad import backward
from ..graph.ir import ExecutionGraph, GraphNode, OpKind, TensorShape, load_graph, save_graph
from ..nn.optim import ArrayAdam

DATA_DIR = Path(__file__).parent / "data"
NAMES = ("capsule-mini", "attn-mini", "toy-clf", "toy-caps")
BENCHMARKS = ("capsule-mini", "attn-mini")


def _n(nid, tag, inputs, shape, w=None, **attrs):
    return GraphNode(nid, OpKind(tag, attrs), tuple(inputs), TensorShape(tuple(shape)), w)


def capsule_mini(seed: int = 11) -> ExecutionGraph:
    rng = np.random.default_rng(seed)
    caps, width_in, width, classes = 64, 16, 8, 16
    w1 = rng.normal(0.0, 0.45 / np.sqrt(width_in), (width_in, width))
    w2 = rng.normal(0.0, 0.8, (width, classes))
    return ExecutionGraph([
        _n("primary", "matmul", [], (caps, width), w1),
        _n("squash", "squash", ["primary"], (caps, width), width=width),
        _n("route", "matmul", ["squash"], (caps, classes), w2),
        _n("softmax", "softmax", ["route"], (caps, classes), d=classes),
    ], "primary", "softmax")


def attn_mini(seed: int = 12) -> ExecutionGraph:
    rng = np.random.default_rng(seed)
    tokens, d = 128, 64
    wq = rng.normal(0.0, 0.3 / np.sqrt(d), (d, d))
    wv = rng.normal(0.0, 8.0, (d, d))
    return ExecutionGraph([
        _n("scores", "matmul", [], (tokens, d), wq),
        _n("softmax", "softmax", ["scores"], (tokens, d), d=d),
        _n("values", "matmul", ["softmax"], (tokens, d), wv),
        _n("gate", "sigmoid", ["values"], (tokens, d)),
    ], "scores", "gate")


def blobs(n: int, seed: int, classes: int = 3, spread: float = 1.0
          ) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian blobs around points on a circle of radius 2.5."""
    rng = np.random.default_rng(seed)
    angles = 2 * np.pi * np.arange(classes) / classes
    centers = 2.5 * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    labels = rng.integers(0, classes, n)
    return centers[labels] + rng.normal(0.0, spread, (n, 2)), labels


def _classifier(hidden_tag: str, hidden: int, seed: int) -> ExecutionGraph:
    rng = np.random.default_rng(seed)
    lim1 = np.sqrt(6.0 / (2 + hidden))
    lim2 = np.sqrt(6.0 / (hidden + 3))
    attrs = {"width": hidden} if hidden_tag == "squash" else {}
    return ExecutionGraph([
        _n("fc1", "matmul", [], (hidden,), rng.uniform(-lim1, lim1, (2, hidden))),
        _n("fc1_bias", "bias_add", ["fc1"], (hidden,), np.zeros(hidden)),
        _n("hidden", hidden_tag, ["fc1_bias"], (hidden,), **attrs),
        _n("fc2", "matmul", ["hidden"], (3,), rng.uniform(-lim2, lim2, (hidden, 3))),
        _n("fc2_bias", "bias_add", ["fc2"], (3,), np.zeros(3)),
        _n("softmax", "softmax", ["fc2_bias"], (3,), d=3),
    ], "fc1", "softmax")


def train_classifier(g: ExecutionGraph, x: np.ndarray, labels: np.ndarray, epochs: int = 60,
                     learning_rate: float = 1e-2, batch_size: int = 32, seed: int = 0
                     ) -> ExecutionGraph:
    """Cross-entropy training of every weighted node."""
    from ..transform.finetune import _with_weights, cross_entropy
    names = [n for n in g.order if g[n].weights is not None]
    opt = ArrayAdam(learning_rate)
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        perm = rng.permutation(len(x))
        for s in range(0, len(x), batch_size):
            idx = perm[s:s + batch_size]
            rec = execute_reference(g, x[idx])
            _, gout = cross_entropy(rec[g.exit][1], labels[idx])
            wg = backward(g, rec, gout)
            new = opt.update({k: np.array(g[k].weights) for k in names}, wg)
            g = g.replace([_with_weights(g[k], new[k]) if k in new else g[k] for k in g.order])
    return g


def toy_classifier(hidden_tag: str = "tanh", seed: int = 21) -> ExecutionGraph:
    hidden = 16 if hidden_tag == "tanh" else 8
    g = _classifier(hidden_tag, hidden, seed)
    x, y = blobs(600, seed)
    return train_classifier(g, x, y, seed=seed)


BUILDERS = {
    "capsule-mini": capsule_mini,
    "attn-mini": attn_mini,
    "toy-clf": lambda: toy_classifier("tanh"),
    "toy-caps": lambda: toy_classifier("squash"),
}


def fixture_path(name: str) -> Path:
    if name not in BUILDERS:
        raise KeyError(f"unknown fixture {name!r}; choose from {', '.join(NAMES)}")
    return DATA_DIR / f"{name}.json"


def load_fixture(name: str) -> ExecutionGraph:
    """Shipped fixture (float32 weights, as stored in the sidecar)."""
    return load_graph(fixture_path(name))


def write_fixtures(directory: Path = DATA_DIR) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    return [save_graph(BUILDERS[n](), directory / f"{n}.json") for n in NAMES]

