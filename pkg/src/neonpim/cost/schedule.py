"""Dependency-respecting list schedule of component activations.

Each node expands into sequential phases; a phase occupies a set of components
for a number of cycles.  Nodes are visited in topological order and a phase
starts once its inputs are done and every component it needs is free, so
independent nodes on disjoint components overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..graph.classify import TRANSFORM_CANDIDATE, classify_op
from ..graph.ir import ExecutionGraph, GraphError, GraphNode
from ..mapping.hardware import HardwareConfig
from ..mapping.lut import lut_footprint
from ..mapping.plan import MappingPlan, add_lut_tiles
from .catalog import ComponentCatalog, LatencyModel

CONFIGS = ("dlc", "lut", "neon")
PERIPHERY = frozenset({"bias_add", "affine", "clamp", "identity"})


class UnroutableError(GraphError):
    pass


@dataclass(frozen=True)
class Interval:
    node: str
    component: str
    start: int
    end: int
    power_mw: float


@dataclass
class Phase:
    cycles: int
    power: dict[str, float] = field(default_factory=dict)  # component -> mW


@dataclass
class Timeline:
    intervals: list[Interval]
    node_span: dict[str, tuple[int, int]]
    units: dict[str, int]            # instantiated DLC units by kind
    plan: MappingPlan

    @property
    def makespan(self) -> int:
        return max((e for _, e in self.node_span.values()), default=0)


def decompose(node: GraphNode, config: str) -> list[tuple[str, int]]:
    """Primitive steps for an op with no native support: (resource, count).

    Resources are DLC unit kinds, ``lut:<table>`` or ``acc`` (vector adder).
    """
    tag = node.tag
    n = node.output_shape.numel
    rows = n // node.op.invocation_size()
    if config == "dlc":
        table = {
            "softmax": [("exp", n), ("acc", n), ("div_sqrt", n)],
            "squash": [("mul", n), ("acc", n), ("div_sqrt", rows), ("div_sqrt", rows),
                       ("mul", n)],
            "sqrt_elementwise": [("div_sqrt", n)],
            "leaky_relu": [("mul", n)],
            "relu": [("acc", n)],
        }
    elif config == "lut":
        table = {
            "softmax": [("lut:exp", n), ("acc", n), ("lut:reciprocal", rows), ("mul", n)],
            "squash": [("mul", n), ("acc", n), ("lut:squash_scale", rows), ("mul", n)],
            "sqrt_elementwise": [("lut:sqrt", n)],
            "leaky_relu": [("lut:leaky_relu", n)],
            "relu": [("lut:relu", n)],
        }
    else:
        raise UnroutableError(f"{tag} has no route under the {config} configuration", [node.id])
    if tag not in table:
        raise UnroutableError(f"{tag} has no route under the {config} configuration", [node.id])
    return table[tag]


def _resource_plan(g: ExecutionGraph, hw: HardwareConfig, config: str,
                   units: dict[str, int] | None) -> tuple[dict[str, list], dict[str, int]]:
    """Steps per node and the unit provisioning they need."""
    steps: dict[str, list] = {}
    # the multiplier ships with every configuration
    needed: dict[str, int] = {"mul": 1} if len(g) else {}
    for nid in g.order:
        node = g[nid]
        tag = node.tag
        if tag == "matmul":
            steps[nid] = [("xbar", 0)]
        elif tag in PERIPHERY:
            steps[nid] = [("acc", node.output_shape.numel)]
        elif tag == "tanh":
            steps[nid] = [("tanh", node.output_shape.numel)]
        elif tag == "mul_elementwise":
            steps[nid] = [("mul", node.output_shape.numel)]
        elif classify_op(node.op, hw.supported_dlc_ops) == TRANSFORM_CANDIDATE:
            if config == "neon":
                raise UnroutableError("untransformed candidate under the neon configuration",
                                      [nid])
            steps[nid] = decompose(node, config)
        else:
            raise UnroutableError(f"{tag} has no route under the {config} configuration", [nid])
        for res, _ in steps[nid]:
            if res in ("exp", "div_sqrt", "tanh", "mul"):
                needed.setdefault(res, 1)
    if units:
        for k, v in units.items():
            if k in needed or v > 0:
                needed[k] = int(v)
    for nid, st in steps.items():
        for res, _ in st:
            if res in ("exp", "div_sqrt", "tanh", "mul") and needed.get(res, 0) < 1:
                raise UnroutableError(f"no {res} unit instantiated", [nid])
    return steps, {k: v for k, v in needed.items() if v > 0}


def schedule(plan: MappingPlan, g: ExecutionGraph, hw: HardwareConfig,
             catalog: ComponentCatalog, model: LatencyModel, config: str,
             units: dict[str, int] | None = None) -> Timeline:
    if config not in CONFIGS:
        raise ValueError(f"config must be one of {CONFIGS}, got {config!r}")
    steps, provision = _resource_plan(g, hw, config, units)
    plan = MappingPlan(plan.hw, list(plan.tiles), dict(plan.placements))
    # lookup tables are provisioned once per function and shared between nodes
    tables: dict[str, tuple[int, list[int]]] = {}
    for st in steps.values():
        for res, _ in st:
            if res.startswith("lut:") and res not in tables:
                fp = lut_footprint(1, hw)
                tables[res] = (fp.subarrays, add_lut_tiles(plan, res, fp.subarrays))
    lanes = model.vector_lanes
    free: dict[str, int] = {}
    intervals: list[Interval] = []
    span: dict[str, tuple[int, int]] = {}
    end: dict[str, int] = {}
    for nid in g.order:
        node = g[nid]
        t = max((end[i] for i in node.inputs), default=0)
        start = None
        for res, count in steps[nid]:
            ph = _phase(nid, node, res, count, plan, hw, catalog, model, provision, tables,
                        lanes, g)
            s = max([t] + [free.get(c, 0) for c in ph.power])
            e = s + ph.cycles
            for c, p in ph.power.items():
                intervals.append(Interval(nid, c, s, e, p))
                free[c] = e
            start = s if start is None else start
            t = e
        span[nid] = (start if start is not None else t, t)
        end[nid] = t
    return Timeline(intervals, span, provision, plan)


def _phase(nid, node, res, count, plan, hw, catalog, model, provision, tables, lanes, g
           ) -> Phase:
    if res == "xbar":
        tiles = plan.tiles_of(nid)
        place = plan.placements[nid]
        rows = node.output_shape.numel // place.fan_out
        per_row = max(model.crossbar_cycles(hw, t.occupied_cols) for t in tiles)
        per_row += place.row_groups - 1
        return Phase(rows * per_row, {f"tile:{t.id}": catalog.tile_power(t.occupied_rows,
                                                                        hw.xbar_rows)
                                      for t in tiles})
    if res == "acc":
        return Phase(max(1, math.ceil(count / lanes)), {})
    if res == "tanh":
        cyc = math.ceil(count / (lanes * provision["tanh"])) * model.unit_cycles("tanh")
        return Phase(cyc, {f"unit:tanh:{i}": catalog["tanh"].power_mw
                           for i in range(provision["tanh"])})
    if res in ("exp", "div_sqrt", "mul"):
        n = provision[res]
        used = min(n, count)
        cyc = math.ceil(count / n) * model.unit_cycles(res)
        return Phase(cyc, {f"unit:{res}:{i}": catalog[res].power_mw for i in range(used)})
    if res.startswith("lut:"):
        subarrays, _ = tables[res]
        # lookups serialize; one subarray is read per access
        return Phase(count * model.lut_cycles(subarrays), {res: catalog["subarray"].power_mw})
    raise UnroutableError(f"unknown resource {res!r}", [nid])


def check_timeline(tl: Timeline, g: ExecutionGraph) -> None:
    """Raise if a component is double-booked or an edge runs backwards."""
    by_comp: dict[str, list[Interval]] = {}
    for iv in tl.intervals:
        by_comp.setdefault(iv.component, []).append(iv)
    for comp, ivs in by_comp.items():
        ivs = sorted(ivs, key=lambda i: (i.start, i.end))
        for a, b in zip(ivs, ivs[1:]):
            if b.start < a.end:
                raise AssertionError(f"{comp} double-booked by {a.node} and {b.node}")
    for nid in g.order:
        for src in g[nid].inputs:
            if tl.node_span[nid][0] < tl.node_span[src][1]:
                raise AssertionError(f"{nid} starts before its input {src} ends")
