"""Weight placement on crossbar subarrays.

A matmul weight ``W`` of shape (fan_in, fan_out) is unrolled into ``fan_out``
kernels (columns of ``W``).  Every value is quantized to ``value_bits`` signed
fixed point and its magnitude cut into ``cols_per_kernel`` digits of
``cell_bits`` bits, one digit per column, least significant first.  Kernels
longer than ``xbar_rows`` are split into row groups whose partial sums are added
after the ADCs.  Packing is greedy first-fit per node: kernels fill a tile's
columns contiguously; nodes never share a tile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..graph.classify import TRANSFORM_CANDIDATE, classify_nodes
from ..graph.ir import ExecutionGraph, GraphError, GraphNode
from .hardware import HardwareConfig

WORKLOAD = "workload_weights"
NEON = "neon_net"
LUT = "lut_storage"


@dataclass(frozen=True)
class Assignment:
    node: str
    kernel: int
    row_group: int
    slice: int
    sign: str
    col: int


@dataclass
class CrossbarTile:
    id: int
    role: str
    node: str | None
    sign: str
    row_group: int
    occupied_rows: int
    occupied_cols: int
    assignments: list[Assignment] = field(default_factory=list)
    cells: np.ndarray | None = None      # uint8 digits, (xbar_rows, xbar_cols)

    def utilization(self, hw: HardwareConfig) -> float:
        return self.occupied_rows * self.occupied_cols / hw.cells

    def active_cols(self) -> int:
        return self.occupied_cols


@dataclass
class NodePlacement:
    node: str
    role: str
    fan_in: int
    fan_out: int
    frac_bits: int
    row_groups: int
    tiles: list[int]
    sign_mask: np.ndarray | None = None  # set when signs are kept digitally


@dataclass
class MappingPlan:
    hw: HardwareConfig
    tiles: list[CrossbarTile] = field(default_factory=list)
    placements: dict[str, NodePlacement] = field(default_factory=dict)

    @property
    def total_subarrays(self) -> int:
        return len(self.tiles)

    def utilization(self) -> list[float]:
        return [t.utilization(self.hw) for t in self.tiles]

    def mean_utilization(self) -> float:
        """Occupied cells over provisioned cells across the whole plan."""
        if not self.tiles:
            return 0.0
        return sum(t.occupied_rows * t.occupied_cols for t in self.tiles) / (
            len(self.tiles) * self.hw.cells)

    def tiles_of(self, node_id: str) -> list[CrossbarTile]:
        return [self.tiles[i] for i in self.placements[node_id].tiles]

    def count(self, role: str) -> int:
        return sum(t.role == role for t in self.tiles)

    def to_dict(self) -> dict:
        tiles = sorted(self.tiles, key=lambda t: (t.node or "", t.row_group, t.sign, t.id))
        return {
            "total_subarrays": self.total_subarrays,
            "mean_utilization": self.mean_utilization(),
            "tiles": [{"id": t.id, "role": t.role, "node": t.node, "sign": t.sign,
                       "row_group": t.row_group, "occupied_rows": t.occupied_rows,
                       "occupied_cols": t.occupied_cols,
                       "utilization": t.utilization(self.hw),
                       "kernels": sorted({a.kernel for a in t.assignments})}
                      for t in tiles],
        }


def unroll_kernels(node: GraphNode) -> list[np.ndarray]:
    """One kernel per output channel, of length fan-in."""
    if node.weights is None or node.weights.ndim != 2:
        raise GraphError("node has no 2-D weight payload to unroll", [node.id])
    return [node.weights[:, j].copy() for j in range(node.weights.shape[1])]


def weight_frac_bits(w: np.ndarray, value_bits: int) -> int:
    m = float(np.max(np.abs(w))) if w.size else 0.0
    int_bits = 0 if m < 1.0 else math.floor(math.log2(m)) + 1
    return min(max(value_bits - 1 - int_bits, 0), value_bits - 1)


def quantize_weights(w: np.ndarray, value_bits: int, frac_bits: int) -> np.ndarray:
    lim = (1 << (value_bits - 1)) - 1
    return np.clip(np.round(w * (1 << frac_bits)), -lim, lim).astype(np.int64)


def to_digits(mag: np.ndarray, hw: HardwareConfig) -> np.ndarray:
    """Magnitudes -> (..., cols_per_kernel) digits, least significant first."""
    base = 1 << hw.cell_bits
    shifts = np.arange(hw.cols_per_kernel) * hw.cell_bits
    return ((mag[..., None] >> shifts) & (base - 1)).astype(np.uint8)


def from_digits(digits: np.ndarray, hw: HardwareConfig) -> np.ndarray:
    shifts = np.arange(hw.cols_per_kernel) * hw.cell_bits
    return np.sum(digits.astype(np.int64) << shifts, axis=-1)


def tiles_for(fan_in: int, fan_out: int, hw: HardwareConfig) -> int:
    """Subarrays one matmul occupies (all signs)."""
    kpt = hw.xbar_cols // hw.cols_per_kernel
    return math.ceil(fan_in / hw.xbar_rows) * math.ceil(fan_out / kpt) * len(hw.signs)


def slice_and_place(node_id: str, weights: np.ndarray, hw: HardwareConfig, role: str,
                    first_id: int = 0) -> tuple[list[CrossbarTile], NodePlacement]:
    fan_in, fan_out = weights.shape
    f = weight_frac_bits(weights, hw.value_bits)
    q = quantize_weights(weights, hw.value_bits, f)
    S = hw.cols_per_kernel
    kpt = hw.xbar_cols // S
    groups = math.ceil(fan_in / hw.xbar_rows)
    blocks = math.ceil(fan_out / kpt)
    tiles: list[CrossbarTile] = []
    if hw.signed_arrays:
        parts = {"pos": np.where(q > 0, q, 0), "neg": np.where(q < 0, -q, 0)}
    else:
        parts = {"mag": np.abs(q)}
    for sign, mag in parts.items():
        digits = to_digits(mag, hw)                   # (fan_in, fan_out, S)
        for rg in range(groups):
            r0, r1 = rg * hw.xbar_rows, min(fan_in, (rg + 1) * hw.xbar_rows)
            for cb in range(blocks):
                k0, k1 = cb * kpt, min(fan_out, (cb + 1) * kpt)
                cells = np.zeros((hw.xbar_rows, hw.xbar_cols), np.uint8)
                block = digits[r0:r1, k0:k1, :].reshape(r1 - r0, (k1 - k0) * S)
                cells[:r1 - r0, :block.shape[1]] = block
                assigns = [Assignment(node_id, k, rg, s, sign, (k - k0) * S + s)
                           for k in range(k0, k1) for s in range(S)]
                tiles.append(CrossbarTile(first_id + len(tiles), role, node_id, sign, rg,
                                          r1 - r0, (k1 - k0) * S, assigns, cells))
    mask = None if hw.signed_arrays else np.sign(q).astype(np.int8)
    place = NodePlacement(node_id, role, fan_in, fan_out, f, groups,
                          [t.id for t in tiles], mask)
    return tiles, place


def reconstruct(plan: MappingPlan, node_id: str) -> np.ndarray:
    """Read a node's fixed-point weights back out of its cells (shift-and-add)."""
    p = plan.placements[node_id]
    hw = plan.hw
    S = hw.cols_per_kernel
    out = np.zeros((p.fan_in, p.fan_out), np.int64)
    for t in plan.tiles_of(node_id):
        r0 = t.row_group * hw.xbar_rows
        ks = sorted({a.kernel for a in t.assignments})
        digits = t.cells[:t.occupied_rows, :t.occupied_cols].reshape(t.occupied_rows,
                                                                     len(ks), S)
        vals = from_digits(digits, hw)
        sgn = -1 if t.sign == "neg" else 1
        out[r0:r0 + t.occupied_rows, ks[0]:ks[-1] + 1] += sgn * vals
    if p.sign_mask is not None:
        out = out * p.sign_mask
    return out


def map_graph(g: ExecutionGraph, hw: HardwareConfig, require_transformed: bool = True
              ) -> MappingPlan:
    """Place every matmul; NEON-Net layers get their own tiles (role ``neon_net``)."""
    plan = MappingPlan(hw)
    if len(g) == 0:
        return plan
    if require_transformed:
        cls = classify_nodes(g, hw)
        left = [n for n in g.order if cls[n] == TRANSFORM_CANDIDATE]
        if left:
            raise GraphError("graph still has unmapped transform candidates", left)
    for nid in sorted(n for n in g.order if g[n].tag == "matmul"):
        node = g[nid]
        role = NEON if "neon_group" in node.attrs else WORKLOAD
        tiles, place = slice_and_place(nid, node.weights, hw, role, len(plan.tiles))
        plan.tiles.extend(tiles)
        plan.placements[nid] = place
    return plan


def add_lut_tiles(plan: MappingPlan, name: str, subarrays: int) -> list[int]:
    """Reserve ``subarrays`` storage tiles for one lookup table."""
    ids = []
    for _ in range(subarrays):
        t = CrossbarTile(len(plan.tiles), LUT, name, "mag", 0, plan.hw.xbar_rows,
                         plan.hw.xbar_cols)
        plan.tiles.append(t)
        ids.append(t.id)
    plan.placements[name] = NodePlacement(name, LUT, 0, 0, 0, 0, ids)
    return ids
