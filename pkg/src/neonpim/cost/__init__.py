from .catalog import Component, ComponentCatalog, LatencyModel
from .schedule import CONFIGS, Interval, Timeline, UnroutableError, check_timeline, schedule
from .evaluate import CostReport, NodeCost, evaluate, init_energy, peak_power, static_power
from .scaling import ScalingCurve, ScalingPoint, operator_scaling_sweep, slope_breaks
from .compare import compare_configs, comparison_csv, geomean, suite_summary

__all__ = [
    "Component", "ComponentCatalog", "LatencyModel", "CONFIGS", "Interval", "Timeline",
    "UnroutableError", "check_timeline", "schedule", "CostReport", "NodeCost", "evaluate",
    "init_energy", "peak_power", "static_power", "ScalingCurve", "ScalingPoint",
    "operator_scaling_sweep", "slope_breaks", "compare_configs", "comparison_csv", "geomean",
    "suite_summary",
]
