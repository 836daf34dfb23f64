"""Side-by-side DLC / LUT / NEON evaluation normalized to DLC."""

from __future__ import annotations

import csv
import io
import math

from ..graph.ir import ExecutionGraph
from ..mapping.hardware import HardwareConfig
from .catalog import ComponentCatalog, LatencyModel
from .evaluate import CostReport, evaluate

METRICS = ("latency_cycles", "area_um2", "peak_power_mw", "avg_power_mw", "energy_uj",
           "edp_js")
COMPARE_CSV_COLUMNS = ("benchmark", "config") + METRICS + tuple(f"{m}_vs_dlc" for m in METRICS)


def _ratio(a: float, b: float) -> float:
    if b == 0:
        return 1.0 if a == 0 else math.inf
    return a / b


def compare_configs(g_original: ExecutionGraph, g_transformed: ExecutionGraph,
                    hw: HardwareConfig, catalog: ComponentCatalog, model: LatencyModel,
                    units: dict[str, int] | None = None) -> dict:
    reports: dict[str, CostReport] = {
        "dlc": evaluate(g_original, hw, catalog, model, "dlc", units),
        "lut": evaluate(g_original, hw, catalog, model, "lut", units),
        "neon": evaluate(g_transformed, hw, catalog, model, "neon", units),
    }
    base = reports["dlc"]
    ratios = {c: {m: _ratio(getattr(r, m), getattr(base, m)) for m in METRICS}
              for c, r in reports.items()}
    for c in ratios:
        ratios[c]["speedup"] = _ratio(base.latency_cycles, reports[c].latency_cycles)
    return {"reports": reports, "ratios": ratios}


def geomean(values) -> float:
    values = list(values)
    if not values:
        return math.nan
    return math.exp(sum(math.log(v) for v in values) / len(values))


def suite_summary(results: dict[str, dict]) -> dict:
    """Geomean of every ratio across benchmarks, per configuration."""
    out = {}
    for cfg in ("dlc", "lut", "neon"):
        keys = list(METRICS) + ["speedup"]
        out[cfg] = {k: geomean(r["ratios"][cfg][k] for r in results.values()) for k in keys}
    return out


def comparison_csv(results: dict[str, dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARE_CSV_COLUMNS)
    for name, res in results.items():
        for cfg, rep in res["reports"].items():
            w.writerow([name, cfg] + [repr(getattr(rep, m)) for m in METRICS]
                       + [repr(res["ratios"][cfg][m]) for m in METRICS])
    return buf.getvalue()
