"""Randomized invariants across modules (hypothesis)."""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import chain, node
from neonpim.cost import ComponentCatalog, LatencyModel, check_timeline, evaluate, schedule
from neonpim.graph import ExecutionGraph, load_graph, run, save_graph
from neonpim.graph import ops
from neonpim.mapping import HardwareConfig, lut_footprint, map_graph, reconstruct
from neonpim.mapping.plan import from_digits, quantize_weights, to_digits
from neonpim.nn import build_net, calibrate, quantize_eval
from neonpim.transform import CaptureDataset, clamp, extract_bounds, rewrite_sigmoid

CAT, LM = ComponentCatalog(), LatencyModel()
SETTINGS = settings(max_examples=40, deadline=None,
                    suppress_health_check=[HealthCheck.function_scoped_fixture])
seeds = st.integers(0, 2 ** 31 - 1)


def random_dag(seed, n):
    """Matmuls with random fan-in from earlier nodes, merged by mul/tanh."""
    r = np.random.default_rng(seed)
    width = int(r.integers(2, 40))
    nodes = [node("x", "matmul", [], (width,), r.normal(size=(width, width)))]
    for k in range(1, n):
        prev = nodes[int(r.integers(0, len(nodes)))].id
        kind = r.integers(0, 3)
        if kind == 0:
            nodes.append(node(f"n{k}", "matmul", [prev], (width,),
                              r.normal(size=(width, width))))
        elif kind == 1:
            nodes.append(node(f"n{k}", "tanh", [prev], (width,)))
        else:
            other = nodes[int(r.integers(0, len(nodes)))].id
            nodes.append(node(f"n{k}", "mul_elementwise", [prev, other], (width,)))
    ids = [nd.id for nd in nodes]
    sinks = [i for i in ids if not any(i in nd.inputs for nd in nodes)]
    out = sinks[0]
    for k, s in enumerate(sinks[1:]):
        nodes.append(node(f"join{k}", "mul_elementwise", [out, s], (width,)))
        out = f"join{k}"
    return ExecutionGraph(nodes, "x", out)


class TestOpProperties:
    @SETTINGS
    @given(seeds, st.integers(1, 64), st.floats(-50, 50))
    def test_softmax_simplex_and_shift(self, seed, d, c):
        x = np.random.default_rng(seed).normal(scale=5, size=(3, d))
        y = ops.softmax(x)
        assert np.all(y >= 0) and np.allclose(y.sum(axis=-1), 1, atol=1e-12)
        np.testing.assert_allclose(ops.softmax(x + c), y, atol=1e-12)

    @SETTINGS
    @given(seeds, st.integers(1, 16))
    def test_squash_norm_and_direction(self, seed, d):
        v = np.random.default_rng(seed).normal(scale=3, size=(5, d))
        s = ops.squash(v)
        n = np.linalg.norm(v, axis=-1)
        np.testing.assert_allclose(np.linalg.norm(s, axis=-1), n ** 2 / (1 + n ** 2),
                                   rtol=1e-12)
        np.testing.assert_allclose(np.sum(s * v, axis=-1), np.linalg.norm(s, axis=-1) * n,
                                   rtol=1e-10)

    @SETTINGS
    @given(seeds, st.sampled_from(["tanh", "sigmoid", "softmax", "squash", "leaky_relu",
                                   "affine"]))
    def test_vjp_matches_finite_differences(self, seed, tag):
        r = np.random.default_rng(seed)
        d = 5
        attrs = {"alpha": 0.1, "scale": 1.7, "shift": 0.2}
        x = r.normal(size=(1, d))
        if tag == "leaky_relu":
            x = np.where(np.abs(x) < 1e-3, 0.5, x)   # stay off the kink
        g = r.normal(size=(1, d))
        y = ops.forward(tag, attrs, [x], None, (d,))
        gx = ops.vjp(tag, attrs, [x], y, g, None)[0][0]
        h = 1e-6
        num = np.zeros(d)
        for i in range(d):
            e = np.zeros_like(x)
            e[0, i] = h
            up = np.sum(g * ops.forward(tag, attrs, [x + e], None, (d,)))
            dn = np.sum(g * ops.forward(tag, attrs, [x - e], None, (d,)))
            num[i] = (up - dn) / (2 * h)
        np.testing.assert_allclose(gx[0], num, rtol=1e-5, atol=1e-8)

    @SETTINGS
    @given(seeds)
    def test_sigmoid_rewrite_equal(self, seed):
        z = np.random.default_rng(seed).uniform(-20, 20, (64, 4))
        g = rewrite_sigmoid(chain(node("s", "sigmoid", [], (4,))))
        assert np.abs(run(g, z) - ops.sigmoid(z)).max() <= 1e-12


class TestGraphProperties:
    @SETTINGS
    @given(seeds, st.integers(1, 12))
    def test_serialization_roundtrip(self, tmp_path, seed, n):
        g = random_dag(seed, n)
        back = load_graph(save_graph(g, tmp_path / f"g{seed}_{n}.json"))
        assert back.order == g.order and back.exit == g.exit
        x = np.random.default_rng(seed).normal(size=g.input_shape.dims)
        for nid in g.order:
            if g[nid].weights is not None:
                assert np.array_equal(back[nid].weights, g[nid].weights.astype(np.float32))
        assert np.all(np.isfinite(run(back, np.tanh(x))))

    @SETTINGS
    @given(seeds, st.integers(1, 12))
    def test_topological_order(self, seed, n):
        g = random_dag(seed, n)
        pos = {nid: k for k, nid in enumerate(g.order)}
        assert all(pos[s] < pos[nid] for nid in g.order for s in g[nid].inputs)


class TestBoundsProperties:
    @SETTINGS
    @given(seeds, st.integers(1, 200), st.integers(1, 8))
    def test_containment_and_idempotence(self, seed, n, d):
        r = np.random.default_rng(seed)
        x, y = r.normal(scale=4, size=(n, d)), r.normal(size=(n, d))
        b = extract_bounds(CaptureDataset(x, y, "n", n))
        np.testing.assert_array_equal(clamp(x, b), x)
        np.testing.assert_array_equal(clamp(y, b, "output"), y)
        z = r.normal(scale=20, size=50)
        np.testing.assert_array_equal(clamp(clamp(z, b), b), clamp(z, b))


class TestMappingProperties:
    @SETTINGS
    @given(seeds, st.sampled_from([1, 2, 4]), st.sampled_from([8, 16]))
    def test_digit_roundtrip(self, seed, cell_bits, value_bits):
        hw = HardwareConfig(cell_bits=cell_bits, value_bits=value_bits)
        mag = np.random.default_rng(seed).integers(0, 2 ** (value_bits - 1), 200)
        np.testing.assert_array_equal(from_digits(to_digits(mag, hw), hw), mag)

    @SETTINGS
    @given(seeds, st.integers(1, 300), st.integers(1, 70), st.sampled_from([32, 64, 128]),
           st.booleans())
    def test_placement_exact_and_within_capacity(self, seed, fan_in, fan_out, size, signed):
        r = np.random.default_rng(seed)
        w = r.normal(scale=float(r.uniform(0.01, 20)), size=(fan_in, fan_out))
        hw = HardwareConfig(xbar_rows=size, xbar_cols=size, signed_arrays=signed)
        g = chain(node("m", "matmul", [], (fan_out,), w))
        plan = map_graph(g, hw, require_transformed=False)
        for t in plan.tiles:
            assert t.occupied_rows <= size and t.occupied_cols <= size
            assert 0 < t.utilization(hw) <= 1
        f = plan.placements["m"].frac_bits
        np.testing.assert_array_equal(reconstruct(plan, "m"), quantize_weights(w, 16, f))
        triples = [(a.kernel, a.row_group, a.slice, a.sign)
                   for t in plan.tiles for a in t.assignments]
        assert len(triples) == len(set(triples))

    @given(st.integers(1, 4), st.sampled_from([8, 16]))
    def test_lut_subarrays_ceil(self, inputs, bits):
        hw = HardwareConfig(value_bits=bits)
        lf = lut_footprint(inputs, hw)
        assert lf.bytes == 2 ** (inputs * bits) * bits // 8
        assert (lf.subarrays - 1) * hw.subarray_bytes < lf.bytes <= lf.subarrays * 4096


class TestScheduleProperties:
    @SETTINGS
    @given(seeds, st.integers(1, 14), st.sampled_from(["dlc", "lut", "neon"]))
    def test_no_double_booking(self, seed, n, cfg):
        g = random_dag(seed, n)
        hw = HardwareConfig()
        tl = schedule(map_graph(g, hw, False), g, hw, CAT, LM, cfg)
        check_timeline(tl, g)
        rep = evaluate(g, hw, CAT, LM, cfg)
        assert rep.energy_uj == pytest.approx(sum(x.energy_pj for x in rep.per_node) * 1e-6,
                                              rel=1e-9)
        assert rep.peak_power_mw <= sum(iv.power_mw for iv in tl.intervals) + 1e-9

    @SETTINGS
    @given(seeds, st.integers(1, 8), st.sampled_from(["subarray", "tanh", "mul"]),
           st.floats(1.0, 10.0))
    def test_energy_monotone_in_power(self, seed, n, entry, factor):
        g = random_dag(seed, n)
        hw = HardwareConfig()
        cat = CAT.with_entry(entry, power_mw=CAT[entry].power_mw * factor)
        assert (evaluate(g, hw, cat, LM, "dlc").energy_uj
                >= evaluate(g, hw, CAT, LM, "dlc").energy_uj)


class TestQuantProperties:
    @SETTINGS
    @given(seeds, st.integers(6, 13))
    def test_error_bound(self, seed, frac):
        r = np.random.default_rng(seed)
        net = build_net([3, 16, 2], r)
        x = r.uniform(-1, 1, (40, 3))
        spec = calibrate(net, samples=x)
        spec = type(spec)(spec.total_bits, min(frac, spec.frac_bits), spec.signed)
        res = quantize_eval(net, spec, x)
        L = np.prod([np.abs(l.weight).sum(axis=1).max() for l in net.layers])
        assert res.saturations == 0
        assert np.abs(res.output - net(x)).max() <= 2.0 ** (-spec.frac_bits + 2) * L
