from .hardware import HardwareConfig
from .lut import LutFootprint, lut_footprint
from .plan import (LUT, NEON, WORKLOAD, Assignment, CrossbarTile, MappingPlan, NodePlacement,
                   add_lut_tiles, map_graph, reconstruct, slice_and_place, tiles_for,
                   unroll_kernels)

__all__ = [
    "HardwareConfig", "LutFootprint", "lut_footprint", "LUT", "NEON",
    "WORKLOAD", "Assignment", "CrossbarTile", "MappingPlan", "NodePlacement", "add_lut_tiles",
    "map_graph", "reconstruct", "slice_and_place", "tiles_for", "unroll_kernels",
]
