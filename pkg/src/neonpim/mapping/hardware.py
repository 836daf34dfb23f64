"""Crossbar hardware parameters."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

from ..graph.classify import DEFAULT_DLC_OPS


@dataclass(frozen=True)
class HardwareConfig:
    xbar_rows: int = 128
    xbar_cols: int = 128
    cell_bits: int = 2
    value_bits: int = 16
    dac_bits: int = 1
    adc_per_subarray: int = 8
    cycle_ns: float = 10.0
    write_read_energy_ratio: float = 1000.0
    supported_dlc_ops: frozenset = field(default=DEFAULT_DLC_OPS)
    # positive and negative weights in separate subarrays; False keeps one
    # magnitude array per tile and applies signs digitally
    signed_arrays: bool = True

    def __post_init__(self):
        object.__setattr__(self, "supported_dlc_ops", frozenset(self.supported_dlc_ops))
        for name in ("xbar_rows", "xbar_cols", "cell_bits", "value_bits", "dac_bits",
                     "adc_per_subarray"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.cycle_ns <= 0 or self.write_read_energy_ratio <= 0:
            raise ValueError("cycle_ns and write_read_energy_ratio must be positive")
        if self.cols_per_kernel > self.xbar_cols:
            raise ValueError("a kernel's slices do not fit in one subarray row")

    @property
    def cols_per_kernel(self) -> int:
        return math.ceil(self.value_bits / self.cell_bits)

    @property
    def input_cycles(self) -> int:
        return math.ceil(self.value_bits / self.dac_bits)

    @property
    def cells(self) -> int:
        return self.xbar_rows * self.xbar_cols

    @property
    def subarray_bytes(self) -> int:
        return self.cells * self.cell_bits // 8

    @property
    def signs(self) -> tuple[str, ...]:
        return ("pos", "neg") if self.signed_arrays else ("mag",)

    def with_(self, **kw) -> "HardwareConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["supported_dlc_ops"] = sorted(self.supported_dlc_ops)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "HardwareConfig":
        d = dict(d)
        if "supported_dlc_ops" in d:
            d["supported_dlc_ops"] = frozenset(d["supported_dlc_ops"])
        return cls(**d)
