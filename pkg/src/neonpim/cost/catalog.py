"""Component area/power catalog and the latency model."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace


@dataclass(frozen=True)
class Component:
    power_mw: float
    area_um2: float
    latency_cycles: int = 1

    def __post_init__(self):
        if self.power_mw <= 0 or self.area_um2 <= 0 or self.latency_cycles < 1:
            raise ValueError(f"invalid component entry {self}")


def _default_entries() -> dict[str, Component]:
    exp = Component(7.424, 5017.0, 10)
    return {
        "subarray": Component(24.08, 13120.0, 1),
        "bank": Component(360.79, 484940.0, 1),
        "exp": exp,
        "div_sqrt": Component(26.88, 23869.0, 20),
        "mul": Component(0.0047, 236.0, 4),
        # no published figure for a tanh unit; the exponent unit stands in
        "tanh": Component(exp.power_mw, exp.area_um2, 8),
    }


@dataclass(frozen=True)
class ComponentCatalog:
    entries: dict = field(default_factory=_default_entries)
    # share of subarray power drawn by its ADCs regardless of active rows
    adc_power_mw: float = 16.0

    def __getitem__(self, name: str) -> Component:
        return self.entries[name]

    def with_entry(self, name: str, **kw) -> "ComponentCatalog":
        e = dict(self.entries)
        e[name] = replace(e[name], **kw)
        return replace(self, entries=e)

    def tile_power(self, active_rows: int, xbar_rows: int) -> float:
        """Subarray power with ``active_rows`` wordlines driven (mW)."""
        sub = self["subarray"].power_mw
        adc = min(self.adc_power_mw, sub)
        return adc + (sub - adc) * min(active_rows, xbar_rows) / xbar_rows

    def mean_fixed_function_power(self) -> float:
        names = ("exp", "div_sqrt", "mul")
        return sum(self[n].power_mw for n in names) / len(names)

    def to_dict(self) -> dict:
        return {"entries": {k: asdict(v) for k, v in sorted(self.entries.items())},
                "adc_power_mw": self.adc_power_mw}

    @classmethod
    def from_dict(cls, d: dict) -> "ComponentCatalog":
        base = _default_entries()
        for k, v in d.get("entries", {}).items():
            base[k] = Component(**{**asdict(base.get(k, Component(1, 1))), **v})
        return cls(base, d.get("adc_power_mw", 16.0))


@dataclass(frozen=True)
class LatencyModel:
    shift_add_per_slice: int = 1
    dlc_cycles: dict = field(default_factory=lambda: {
        "exp": 10, "div_sqrt": 20, "mul": 4, "tanh": 8})
    lut_base: int = 2
    lut_per_level: int = 2
    # elements handled per cycle by the tanh unit and by the digital periphery
    vector_lanes: int = 128

    def crossbar_cycles(self, hw, active_cols: int) -> int:
        return (hw.input_cycles + math.ceil(active_cols / hw.adc_per_subarray)
                + self.shift_add_per_slice * hw.cols_per_kernel)

    def lut_cycles(self, subarrays: int) -> int:
        levels = math.ceil(math.log2(subarrays)) if subarrays > 1 else 0
        return self.lut_base + self.lut_per_level * levels

    def unit_cycles(self, kind: str) -> int:
        return int(self.dlc_cycles[kind])

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "LatencyModel":
        d = dict(d)
        if "dlc_cycles" in d:
            d["dlc_cycles"] = {**cls().dlc_cycles, **d["dlc_cycles"]}
        return cls(**d)
