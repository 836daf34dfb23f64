"""Lookup-table memory footprint."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .hardware import HardwareConfig

DEFAULT_CAP_BYTES = 256 * 2 ** 20


@dataclass(frozen=True)
class LutFootprint:
    inputs: int
    bytes: int
    subarrays: int
    feasible: bool


def lut_footprint(inputs: int, hw: HardwareConfig, cap_bytes: int = DEFAULT_CAP_BYTES
                  ) -> LutFootprint:
    """A table indexed by ``inputs`` values of ``value_bits`` each, one value per entry."""
    if inputs < 1:
        raise ValueError("a table needs at least one input")
    entries = 2 ** (inputs * hw.value_bits)
    nbytes = entries * math.ceil(hw.value_bits / 8)
    subarrays = -(-nbytes // hw.subarray_bytes)
    return LutFootprint(inputs, nbytes, subarrays, nbytes <= cap_bytes)

