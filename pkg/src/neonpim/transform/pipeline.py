"""End-to-end transform: rewrite sigmoids, then replace every candidate node."""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..graph.ir import ExecutionGraph
from ..nn.train import TrainConfig
from .datasets import CaptureDataset, capture
from .grow import NeonNet, grow_structure
from .rewrite import apply_replacement, delineate, identity_rewrites, rewrite_sigmoid

DEFAULT_CAPTURE_ROWS = 50_000


def derive_seed(master: int, node_id: str) -> int:
    h = hashlib.sha256(f"{int(master)}:{node_id}".encode()).digest()
    return int.from_bytes(h[:8], "little") >> 1


@dataclass
class TransformResult:
    graph: ExecutionGraph
    neons: dict[str, NeonNet] = field(default_factory=dict)
    datasets: dict[str, CaptureDataset] = field(default_factory=dict)
    identity_rewrites: list[str] = field(default_factory=list)

    def report(self) -> dict:
        """Per-candidate summary; wall time is kept out so reruns are byte-identical."""
        rows = []
        for nid, neon in self.neons.items():
            r = neon.report
            rows.append({
                "node": nid, "op": neon.replaced_op.to_dict(), "dims": list(neon.dims),
                "hidden_layers": r.hidden_layers, "mse_validation": r.mse_validation,
                "bounds": neon.bounds.to_dict(), "converged": r.converged,
                "epochs_run": r.epochs_run, "samples": len(self.datasets[nid])
                if nid in self.datasets else None,
            })
        return {"candidates": rows, "identity_rewrites": list(self.identity_rewrites),
                "all_converged": all(n.converged for n in self.neons.values())}

    def timing(self) -> dict:
        return {nid: n.report.training_seconds for nid, n in self.neons.items()}


def graph_samples(g: ExecutionGraph, rows: int, seed: int, scale: float = 1.0) -> np.ndarray:
    """Seeded Gaussian graph inputs, enough to yield about ``rows`` capture rows."""
    per_sample = max(1, g.input_shape.numel // max(g.input_shape.last, 1))
    n = max(1, math.ceil(rows / per_sample))
    return np.random.default_rng(seed).normal(0.0, scale, (n,) + g.input_shape.dims)


def _grow(args):
    ds, cfg, op = args
    return grow_structure(ds, cfg, op)


def transform_graph(g: ExecutionGraph, cfg: TrainConfig, sample_inputs: np.ndarray,
                    hw=None, jobs: int = 1, repeat: int = 1,
                    datasets: dict[str, CaptureDataset] | None = None) -> TransformResult:
    """Capture each candidate on ``sample_inputs``, grow a NEON-Net, splice it in.

    ``datasets`` may supply ready-made training data per node id.
    """
    sig = identity_rewrites(g, hw)
    g = rewrite_sigmoid(g)
    cands = delineate(g, hw)
    dsets = {}
    for nid in cands:
        if datasets and nid in datasets:
            dsets[nid] = datasets[nid]
        else:
            # each row is one call; a capture row at width 1 is one element
            dsets[nid] = capture(g, nid, sample_inputs, repeat)
    work = [(dsets[nid], cfg.with_(seed=derive_seed(cfg.seed, nid)), g[nid].op)
            for nid in cands]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            nets = list(pool.map(_grow, work))
    else:
        nets = [_grow(w) for w in work]
    neons = dict(zip(cands, nets))
    for nid in cands:
        g = apply_replacement(g, nid, neons[nid])
    return TransformResult(g, neons, dsets, sig)
