import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import chain, node
from neonpim.cli import EXIT_ERROR, EXIT_OK, main
from neonpim.graph import load_graph, save_graph

FAST = ["--xbar-size", "16", "--epochs", "2", "--max-layers", "1", "--rows", "16",
        "--seed", "3"]


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# manifest ")
    return list(csv.DictReader(lines[1:]))


@pytest.fixture(scope="module")
def transformed(tmp_path_factory):
    out = tmp_path_factory.mktemp("tr")
    assert main(["transform", "--graph", "capsule-mini", "--out", str(out)] + FAST) == EXIT_OK
    return out


class TestTransform:
    def test_capsule_mini(self, transformed):
        rep = json.loads((transformed / "transform_report.json").read_text())
        assert {c["op"]["op"] for c in rep["candidates"]} == {"squash", "softmax"}
        assert all("hidden_layers" in c and "mse_validation" in c for c in rep["candidates"])
        assert len(list((transformed / "neon").glob("*.json"))) == 2
        assert len(rep["manifest_hash"]) == 16
        g = load_graph(transformed / "transformed.json")
        assert "squash" not in {g[n].tag for n in g.order}

    def test_no_candidates(self, tmp_path, rng):
        g = chain(node("a", "matmul", [], (4,), rng.normal(size=(3, 4))),
                  node("t", "tanh", ["a"], (4,)))
        save_graph(g, tmp_path / "g.json")
        out = tmp_path / "o"
        assert main(["transform", "--graph", str(tmp_path / "g.json"), "--out", str(out)]
                    + FAST) == EXIT_OK
        assert json.loads((out / "transform_report.json").read_text())["candidates"] == []
        back = load_graph(out / "transformed.json")
        assert back.order == g.order
        np.testing.assert_array_equal(back["a"].weights, g["a"].weights.astype(np.float32))

    def test_missing_sidecar(self, tmp_path, rng):
        g = chain(node("a", "matmul", [], (4,), rng.normal(size=(3, 4))))
        save_graph(g, tmp_path / "g.json")
        (tmp_path / "g.bin").unlink()
        assert main(["transform", "--graph", str(tmp_path / "g.json"),
                     "--out", str(tmp_path / "o")]) == EXIT_ERROR

    def test_missing_graph(self, tmp_path):
        assert main(["transform", "--graph", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path)]) == EXIT_ERROR

    def test_rerun_byte_identical(self, transformed, tmp_path):
        assert main(["transform", "--graph", "capsule-mini", "--out", str(tmp_path)]
                    + FAST) == EXIT_OK
        for name in ("transform_report.json", "transformed.json", "transformed.bin"):
            assert (tmp_path / name).read_bytes() == (transformed / name).read_bytes()


class TestSimulate:
    def test_three_rows(self, transformed, tmp_path):
        rc = main(["simulate", "--graph", str(transformed / "transformed.json"),
                   "--baseline", "capsule-mini", "--out", str(tmp_path)])
        assert rc == EXIT_OK
        rows = read_csv(tmp_path / "simulate.csv")
        assert [r["config"] for r in rows] == ["dlc", "lut", "neon"]
        assert float(rows[2]["init_energy_uj"]) > 0
        for arch in ("dlc", "lut", "neon"):
            rep = json.loads((tmp_path / f"cost_{arch}.json").read_text())
            assert rep["config"] == arch
            assert read_csv(tmp_path / f"cost_{arch}_nodes.csv")

    def test_neon_on_untransformed_fails(self, tmp_path):
        assert main(["simulate", "--graph", "capsule-mini", "--arch", "neon",
                     "--out", str(tmp_path)]) == EXIT_ERROR


class TestCompare:
    def test_ratios_and_determinism(self, tmp_path):
        args = ["compare", "--graph", "capsule-mini"] + FAST
        assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
        assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
        a = (tmp_path / "a" / "compare.json").read_bytes()
        assert a == (tmp_path / "b" / "compare.json").read_bytes()
        data = json.loads(a)
        ratios = data["benchmarks"]["capsule-mini"]["ratios"]
        assert all(v == 1.0 for v in ratios["dlc"].values())
        assert data["geomean"]["dlc"]["speedup"] == 1.0
        rows = read_csv(tmp_path / "a" / "compare.csv")
        assert [r["config"] for r in rows] == ["dlc", "lut", "neon"]


class TestScaling:
    def test_rows_and_breaks(self, tmp_path):
        assert main(["scaling", "--out", str(tmp_path)]) == EXIT_OK
        rows = read_csv(tmp_path / "scaling.csv")
        for cfg in ("dlc", "lut", "neon"):
            assert len([r for r in rows if r["config"] == cfg]) == 10
        data = json.loads((tmp_path / "scaling.json").read_text())
        assert data["breaks"]["neon"] == [128]
        lut = [r for r in rows if r["config"] == "lut"]
        assert [r["feasible"] for r in lut[:2]] == ["1", "0"]

    def test_bad_counts(self, tmp_path):
        assert main(["scaling", "--counts", "4,x", "--out", str(tmp_path)]) == EXIT_ERROR
        assert main(["scaling", "--counts", "8,4", "--out", str(tmp_path)]) == EXIT_ERROR


class TestGridsearch:
    def test_single_and_reproducible(self, tmp_path):
        args = ["gridsearch", "--op", "softmax:4", "--activations", "relu", "--rows", "200",
                "--xbar-size", "8", "--epochs", "2", "--seed", "1"]
        assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
        assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
        a = (tmp_path / "a" / "gridsearch.json").read_bytes()
        assert a == (tmp_path / "b" / "gridsearch.json").read_bytes()
        assert [r["activation"] for r in json.loads(a)["ranking"]] == ["relu"]


class TestConfig:
    def test_flags_override_file(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"train": {"xbar_size": 32}, "hardware": {"xbar_rows": 64}}))
        assert main(["scaling", "--config", str(cfg), "--xbar-size", "8",
                     "--out", str(tmp_path)]) == EXIT_OK
        man = json.loads((tmp_path / "scaling.json").read_text())["manifest"]
        assert man["config"]["train"]["xbar_size"] == 8
        assert man["config"]["hardware"]["xbar_rows"] == 64
        assert json.loads((tmp_path / "scaling.json").read_text())["breaks"]["neon"] == [64]

    def test_bad_config(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text("{not json")
        assert main(["scaling", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_ERROR

    def test_module_entry_point(self):
        r = subprocess.run([sys.executable, "-m", "neonpim", "--version"], capture_output=True,
                           text=True)
        assert r.returncode == 0 and r.stdout.strip()
