"""EDP versus the number of inputs an operator consumes."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from ..mapping.hardware import HardwareConfig
from ..mapping.lut import DEFAULT_CAP_BYTES, lut_footprint
from .catalog import ComponentCatalog, LatencyModel

SCALING_CSV_COLUMNS = ("config", "count", "latency_cycles", "energy_pj", "edp_pj_cycles",
                       "subarrays_or_units", "feasible")
DEFAULT_COUNTS = tuple(2 ** k for k in range(10))
BREAK_THRESHOLD = 0.25


@dataclass(frozen=True)
class ScalingPoint:
    config: str
    count: int
    latency_cycles: int
    energy_pj: float
    resources: int
    feasible: bool = True

    @property
    def edp(self) -> float:
        return self.energy_pj * self.latency_cycles if self.feasible else math.inf


@dataclass
class ScalingCurve:
    counts: list[int]
    points: dict[str, list[ScalingPoint]] = field(default_factory=dict)
    breaks: dict[str, list[int]] = field(default_factory=dict)

    def edp(self, config: str) -> list[float]:
        return [p.edp for p in self.points[config]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SCALING_CSV_COLUMNS)
        for cfg, pts in self.points.items():
            for p in pts:
                w.writerow([cfg, p.count, p.latency_cycles, repr(p.energy_pj), repr(p.edp),
                            p.resources, int(p.feasible)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"counts": self.counts, "breaks": self.breaks,
                "edp": {c: [p.edp if p.feasible else None for p in pts]
                        for c, pts in self.points.items()}}


def dlc_point(n: int, hw: HardwareConfig, catalog: ComponentCatalog, model: LatencyModel
              ) -> ScalingPoint:
    # one exponent unit per input: all inputs finish in one unit latency
    cyc = model.unit_cycles("exp")
    return ScalingPoint("dlc", n, cyc, n * catalog["exp"].power_mw * cyc * hw.cycle_ns, n)


def neon_point(n: int, hw: HardwareConfig, catalog: ComponentCatalog, model: LatencyModel
               ) -> ScalingPoint:
    # inputs drive wordlines of one subarray; another subarray joins per full
    # subarray of rows and its partial sum costs one extra cycle
    tiles = math.ceil(n / hw.xbar_rows)
    cyc = model.crossbar_cycles(hw, hw.xbar_cols) + tiles - 1
    power = sum(catalog.tile_power(min(hw.xbar_rows, n - k * hw.xbar_rows), hw.xbar_rows)
                for k in range(tiles))
    return ScalingPoint("neon", n, cyc, power * cyc * hw.cycle_ns, tiles)


def lut_point(n: int, hw: HardwareConfig, catalog: ComponentCatalog, model: LatencyModel,
              cap_bytes: int) -> ScalingPoint:
    fp = lut_footprint(n, hw, cap_bytes)
    cyc = model.lut_cycles(fp.subarrays)
    return ScalingPoint("lut", n, cyc, catalog["subarray"].power_mw * cyc * hw.cycle_ns,
                        fp.subarrays, fp.feasible)


def slope_breaks(counts: list[int], edp: list[float], threshold: float = BREAK_THRESHOLD
                 ) -> list[int]:
    """Counts where the log-log slope of the next segment jumps by > threshold."""
    slopes = []
    for (c0, e0), (c1, e1) in zip(zip(counts, edp), zip(counts[1:], edp[1:])):
        if not all(map(math.isfinite, (e0, e1))) or e0 <= 0 or e1 <= 0:
            slopes.append(None)
        else:
            slopes.append(math.log(e1 / e0) / math.log(c1 / c0))
    out = []
    for k in range(1, len(slopes)):
        a, b = slopes[k - 1], slopes[k]
        if a is not None and b is not None and b - a > threshold:
            out.append(counts[k])
    return out


def operator_scaling_sweep(hw: HardwareConfig, catalog: ComponentCatalog,
                           model: LatencyModel, counts=DEFAULT_COUNTS,
                           cap_bytes: int = DEFAULT_CAP_BYTES) -> ScalingCurve:
    counts = list(counts)
    if counts != sorted(counts) or any(c < 1 for c in counts):
        raise ValueError("counts must be positive and ascending")
    pts = {
        "dlc": [dlc_point(n, hw, catalog, model) for n in counts],
        "lut": [lut_point(n, hw, catalog, model, cap_bytes) for n in counts],
        "neon": [neon_point(n, hw, catalog, model) for n in counts],
    }
    curve = ScalingCurve(counts, pts)
    curve.breaks = {c: slope_breaks(counts, curve.edp(c)) for c in pts}
    return curve
