"""Aggregate a schedule into latency, area, power, energy and EDP."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field

from ..graph.ir import ExecutionGraph
from ..mapping.hardware import HardwareConfig
from ..mapping.plan import NEON, MappingPlan, map_graph
from ..transform.rewrite import rewrite_sigmoid
from .catalog import ComponentCatalog, LatencyModel
from .schedule import Timeline, schedule

NODE_CSV_COLUMNS = ("node", "op", "start_cycle", "end_cycle", "energy_pj", "components")


@dataclass
class NodeCost:
    node: str
    op: str
    start_cycle: int
    end_cycle: int
    energy_pj: float
    components: int


@dataclass
class CostReport:
    config: str
    latency_cycles: int
    latency_s: float
    area_um2: float
    peak_power_mw: float
    avg_power_mw: float
    provisioned_power_mw: float
    energy_uj: float
    edp_js: float
    subarrays: int
    units: dict = field(default_factory=dict)
    init_energy_uj: float = 0.0
    per_node: list[NodeCost] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_node"] = [asdict(n) for n in self.per_node]
        return d

    def node_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(NODE_CSV_COLUMNS)
        for n in self.per_node:
            w.writerow([n.node, n.op, n.start_cycle, n.end_cycle, repr(n.energy_pj),
                        n.components])
        return buf.getvalue()


def peak_power(tl: Timeline) -> float:
    """Largest total power of simultaneously active components (event sweep)."""
    events = []
    for iv in tl.intervals:
        if iv.end > iv.start:
            events.append((iv.start, 1, iv.power_mw))
            events.append((iv.end, 0, -iv.power_mw))
    # ends sort before starts at equal times
    events.sort(key=lambda e: (e[0], e[1]))
    cur = best = 0.0
    for _, _, p in events:
        cur += p
        best = max(best, cur)
    return best


def init_energy(plan: MappingPlan, hw: HardwareConfig, catalog: ComponentCatalog) -> float:
    """Energy (uJ) to program every occupied NEON-Net cell once.

    Per-cell read energy is the array share of one subarray cycle (ADC power
    excluded, it is not spent on writes) spread over all cells; a write costs
    ``write_read_energy_ratio`` reads.
    """
    cells = sum(t.occupied_rows * t.occupied_cols for t in plan.tiles if t.role == NEON)
    array_mw = catalog["subarray"].power_mw - catalog.adc_power_mw
    read_pj = array_mw * hw.cycle_ns / hw.cells
    return cells * read_pj * hw.write_read_energy_ratio * 1e-6


def evaluate(g: ExecutionGraph, hw: HardwareConfig, catalog: ComponentCatalog,
             model: LatencyModel, config: str, units: dict[str, int] | None = None,
             plan: MappingPlan | None = None) -> CostReport:
    """Map (unless ``plan`` is given), schedule and aggregate one configuration.

    Sigmoids are rewritten through tanh in every configuration.  ``dlc`` and
    ``lut`` expect the original graph; ``neon`` expects a transformed one.
    """
    g = rewrite_sigmoid(g)
    if plan is None:
        plan = map_graph(g, hw, require_transformed=(config == "neon"))
    tl = schedule(plan, g, hw, catalog, model, config, units)
    full = tl.plan
    per_node: dict[str, float] = {nid: 0.0 for nid in g.order}
    comps: dict[str, set] = {nid: set() for nid in g.order}
    for iv in tl.intervals:
        per_node[iv.node] += iv.power_mw * (iv.end - iv.start) * hw.cycle_ns
        comps[iv.node].add(iv.component)
    energy_pj = sum(per_node.values())
    cycles = tl.makespan
    seconds = cycles * hw.cycle_ns * 1e-9
    sub = catalog["subarray"]
    area = len(full.tiles) * sub.area_um2 + sum(catalog[k].area_um2 * n
                                                for k, n in tl.units.items())
    provisioned = len(full.tiles) * sub.power_mw + sum(catalog[k].power_mw * n
                                                       for k, n in tl.units.items())
    nodes = [NodeCost(nid, g[nid].tag, *tl.node_span[nid], per_node[nid], len(comps[nid]))
             for nid in g.order]
    energy_j = energy_pj * 1e-12
    return CostReport(
        config=config, latency_cycles=cycles, latency_s=seconds, area_um2=area,
        peak_power_mw=peak_power(tl),
        avg_power_mw=(energy_j / seconds * 1e3) if seconds else 0.0,
        provisioned_power_mw=provisioned, energy_uj=energy_pj * 1e-6,
        edp_js=energy_j * seconds, subarrays=len(full.tiles), units=dict(tl.units),
        init_energy_uj=init_energy(full, hw, catalog) if config == "neon" else 0.0,
        per_node=nodes)


def static_power(catalog: ComponentCatalog, units: dict[str, int]) -> float:
    """Provisioned power (mW) of a set of fixed-function units."""
    return sum(catalog[k].power_mw * n for k, n in units.items())
