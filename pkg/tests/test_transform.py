import numpy as np
import pytest

from conftest import chain, node
from neonpim.fixtures import blobs, capsule_mini, toy_classifier
from neonpim.graph import GraphError, classify_nodes, run
from neonpim.graph.ir import OpKind
from neonpim.nn import FcNet, Layer, TrainConfig
from neonpim.transform import (BoundSpec, CaptureDataset, CaptureError, GrowthReport, NeonNet,
                               accuracy, activation_grid_search, apply_replacement, capture,
                               clamp, delineate, extract_bounds, fine_tune, grow_structure,
                               load_dataset, neon_groups, rewrite_sigmoid, save_dataset,
                               synthetic_dataset, transform_graph)
from neonpim.transform.rewrite import identity_rewrites

FAST = TrainConfig.desk(xbar_size=16, num_epochs=3, max_layers=2, epsilon=1e-12)


def sigmoid_graph():
    return chain(node("s", "sigmoid", [], (8,)))


def exact_identity_net(width, scale=1e-5):
    # tanh(s x)/s == x to O(s^2 x^3): a near-perfect NEON-Net for an identity-valued op
    return FcNet([Layer(scale * np.eye(width), np.zeros(width), "tanh"),
                  Layer(np.eye(width) / scale, np.zeros(width), "linear")])


def neon_for(op, net, lo=-50.0, hi=50.0):
    rep = GrowthReport(len(net.layers) - 1, 0.0, 0, 0.0, True, [0.0])
    return NeonNet(net, BoundSpec(lo, hi, lo, hi), op, rep)


class TestDelineate:
    def test_capsule_mini(self):
        g = capsule_mini()
        assert {g[n].tag for n in delineate(g)} == {"squash", "softmax"}
        assert len(delineate(g)) == 2

    def test_matmul_tanh_only(self):
        g = chain(node("a", "matmul", [], (4,), np.ones((3, 4))), node("t", "tanh", ["a"], (4,)))
        assert delineate(g) == []

    def test_sigmoid_only(self):
        g = sigmoid_graph()
        assert delineate(g) == [] and identity_rewrites(g) == ["s"]


class TestSigmoidRewrite:
    def evaluate(self, z):
        g = rewrite_sigmoid(sigmoid_graph())
        return run(g, np.broadcast_to(z, (len(z), 8)).copy() if np.ndim(z) else
                   np.full(8, z))

    def test_zero(self):
        assert np.all(self.evaluate(0.0) == 0.5)

    def test_two(self):
        assert self.evaluate(2.0)[0] == pytest.approx((np.tanh(1.0) + 1) / 2, abs=1e-15)
        assert self.evaluate(2.0)[0] == pytest.approx(0.880797, abs=1e-6)

    def test_sweep(self, rng):
        z = rng.uniform(-20, 20, (12_500, 8))
        g = rewrite_sigmoid(sigmoid_graph())
        assert np.abs(run(g, z) - 1 / (1 + np.exp(-z))).max() <= 1e-12

    def test_structure(self):
        g = rewrite_sigmoid(sigmoid_graph())
        assert [g[n].tag for n in g.order] == ["affine", "tanh", "affine"]
        assert g.exit == "s" and "sigmoid" not in {g[n].tag for n in g.order}


class TestCapture:
    def test_identity(self, rng):
        g = chain(node("a", "matmul", [], (4,), rng.normal(size=(3, 4))),
                  node("i", "identity", ["a"], (4,)))
        ds = capture(g, "i", rng.normal(size=(10, 3)))
        np.testing.assert_array_equal(ds.inputs, ds.outputs)

    def test_softmax_rows_sum_to_one(self, mm_softmax, rng):
        ds = capture(mm_softmax, "sm", rng.normal(size=(50, 8)))
        assert ds.in_dim == 16 and len(ds) == 50
        assert np.abs(ds.outputs.sum(axis=1) - 1).max() <= 1e-9

    def test_size_is_samples_times_repeat(self, mm_softmax, rng):
        assert len(capture(mm_softmax, "sm", rng.normal(size=(7, 8)), repeat=3)) == 21

    def test_elementwise_rows_are_scalars(self, rng):
        g = capsule_mini()
        x = rng.normal(size=(2, 64, 16))
        sq = [n for n in g.order if g[n].tag == "squash"][0]
        ds = capture(g, sq, x)
        assert ds.in_dim == g[sq].op.invocation_size()

    def test_error_has_sample_index(self):
        g = chain(node("q", "sqrt_elementwise", [], (2,)))
        x = np.array([[1.0, 4.0], [1.0, 1.0], [-1.0, 2.0]])
        with pytest.raises(CaptureError) as err:
            capture(g, "q", x)
        assert err.value.sample_index == 2

    def test_file_roundtrip(self, tmp_path):
        ds = synthetic_dataset(OpKind("softmax", {"d": 8}), 100, 1)
        back = load_dataset(save_dataset(ds, tmp_path / "ds.json"))
        np.testing.assert_array_equal(back.inputs, ds.inputs.astype(np.float32))
        assert back.op == ds.op and back.sample_count == 100


class TestBounds:
    def ds(self, x, y=None):
        x = np.asarray(x, float)
        return CaptureDataset(x, x if y is None else y, "n", len(x))

    def test_reference_domain(self):
        b = extract_bounds(self.ds([-1.8, 0.0, 3.3, 9.05]))
        assert (b.input_min, b.input_max) == (-1.8, 9.05)

    def test_degenerate_padding(self):
        b = extract_bounds(self.ds([2.0, 2.0, 2.0]))
        assert b.input_min == 2.0 - 1e-6 and b.input_max == 2.0 + 1e-6

    def test_output_max(self):
        b = extract_bounds(self.ds(np.zeros(3), [0.1, 0.87, 0.5]))
        assert b.output_max == 0.87

    def test_clamp(self, rng):
        b = BoundSpec(-1.8, 9.05, 0.0, 1.0)
        assert clamp(np.array([10.0]), b)[0] == 9.05
        assert clamp(np.array([3.0]), b)[0] == 3.0
        x = rng.normal(scale=10, size=100)
        np.testing.assert_array_equal(clamp(clamp(x, b), b), clamp(x, b))
        assert clamp(np.array([5.0]), b, "output")[0] == 1.0

    def test_invalid(self):
        with pytest.raises(ValueError):
            BoundSpec(1.0, 1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            BoundSpec(0.0, 1.0, 0.0, 1.0).range("middle")


class TestGrow:
    def test_not_converged_at_max_layers(self):
        ds = synthetic_dataset(OpKind("softmax", {"d": 4}), 400, 2)
        neon = grow_structure(ds, FAST)
        assert not neon.converged
        assert neon.report.hidden_layers == 2 == len(neon.net.layers) - 1
        assert len(neon.report.history) == 2
        assert all(l.out_dim == 16 for l in neon.net.layers[:-1])
        assert neon.dims == (4, 4)

    def test_converges_with_one_layer(self):
        ds = synthetic_dataset(OpKind("softmax", {"d": 4}), 400, 2)
        neon = grow_structure(ds, FAST.with_(epsilon=1.0))
        assert neon.converged and neon.report.hidden_layers == 1
        assert neon.report.mse_validation <= 1.0

    def test_bounds_contain_dataset(self):
        ds = synthetic_dataset(OpKind("squash", {"width": 4}), 300, 3)
        neon = grow_structure(ds, FAST.with_(epsilon=1.0))
        np.testing.assert_array_equal(clamp(ds.inputs, neon.bounds), ds.inputs)

    def test_empty(self):
        with pytest.raises(ValueError):
            grow_structure(CaptureDataset(np.zeros((0, 2)), np.zeros((0, 2)), "n", 0), FAST)


class TestGridSearch:
    def test_single_and_deterministic(self):
        ds = synthetic_dataset(OpKind("softmax", {"d": 4}), 300, 5)
        one = activation_grid_search(ds, FAST, ["relu"])
        assert len(one) == 1 and one[0][0] == "relu"
        a = activation_grid_search(ds, FAST)
        assert a == activation_grid_search(ds, FAST)
        assert [m for _, m in a] == sorted(m for _, m in a)
        assert {n for n, _ in a} == {"tanh", "relu", "sigmoid"}


class TestReplacement:
    @pytest.fixture
    def relu_graph(self, rng):
        # bias keeps every relu input positive, so relu acts as the identity
        return chain(node("fc1", "matmul", [], (4,), rng.normal(size=(2, 4))),
                     node("b1", "bias_add", ["fc1"], (4,), np.full(4, 20.0)),
                     node("act", "relu", ["b1"], (4,)),
                     node("fc2", "matmul", ["act"], (3,), rng.normal(size=(4, 3))),
                     node("b2", "bias_add", ["fc2"], (3,), np.zeros(3)),
                     node("sm", "softmax", ["b2"], (3,), d=3))

    def test_splice_structure(self, relu_graph):
        g = apply_replacement(relu_graph, "act", neon_for(OpKind("relu"), exact_identity_net(1)))
        assert neon_groups(g)["act"] == ["act/clamp_in", "act/l0/matmul", "act/l0/bias",
                                         "act/l0/tanh", "act/l1/matmul", "act/l1/bias", "act"]
        assert g.exit == "sm" and "act" in g["fc2"].inputs
        assert delineate(g) == ["sm"]

    def test_near_exact_net_is_transparent(self, relu_graph, rng):
        g = apply_replacement(relu_graph, "act", neon_for(OpKind("relu"), exact_identity_net(1)))
        x = rng.normal(size=(500, 2))
        labels = np.argmax(run(relu_graph, x), axis=1)
        assert np.abs(run(g, x) - run(relu_graph, x)).max() < 1e-6
        # a (near) zero-MSE substitution changes no prediction
        assert accuracy(g, x, labels) == accuracy(relu_graph, x, labels) == 1.0

    def test_dims_mismatch(self, relu_graph):
        with pytest.raises(GraphError):
            apply_replacement(relu_graph, "act", neon_for(OpKind("relu"), exact_identity_net(2)))

    def test_pipeline_on_capsule_mini(self, rng):
        g = capsule_mini()
        x = rng.normal(size=(40, 64, 16))
        res = transform_graph(g, FAST.with_(max_layers=1), x)
        tg = res.graph
        assert set(res.neons) == set(delineate(g))
        assert delineate(tg) == []
        assert all(c in ("crossbar_native", "dlc_native") for c in classify_nodes(tg).values())
        # fixpoint: a second pass finds nothing to replace
        again = transform_graph(tg, FAST, x[:2])
        assert [again.graph[n].tag for n in again.graph.order] == [tg[n].tag for n in tg.order]
        assert np.all(np.isfinite(run(tg, x[:3])))
        rep = res.report()
        assert {r["op"]["op"] for r in rep["candidates"]} == {"squash", "softmax"}


class TestFineTune:
    def test_frozen_layers_bit_identical(self):
        g = toy_classifier("tanh")
        x, y = blobs(300, 5)
        sm = synthetic_dataset(OpKind("softmax", {"d": 3}), 2000, 1)
        res = transform_graph(g, FAST.with_(max_layers=1), x, datasets={"softmax": sm})
        ft = fine_tune(res.graph, g, x, y, epochs=2)
        assert set(ft.trainable) == {"fc2", "fc2_bias"}
        for nid in res.graph.order:
            w = res.graph[nid].weights
            if w is not None and nid not in ft.trainable:
                assert ft.graph[nid].weights.tobytes() == w.tobytes()
        assert not np.array_equal(ft.graph["fc2"].weights, res.graph["fc2"].weights)
        assert len(ft.losses) == 2 and np.all(np.isfinite(ft.losses))
