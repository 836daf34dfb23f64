"""Input-domain / output-range extraction and saturating clamp."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

DEGENERATE_PAD = 1e-6


@dataclass(frozen=True)
class BoundSpec:
    input_min: float
    input_max: float
    output_min: float
    output_max: float

    def __post_init__(self):
        if not (self.input_min < self.input_max and self.output_min < self.output_max):
            raise ValueError(f"empty bound range: {self}")

    def range(self, which: str) -> tuple[float, float]:
        if which == "input":
            return self.input_min, self.input_max
        if which == "output":
            return self.output_min, self.output_max
        raise ValueError(f"which must be 'input' or 'output', got {which!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def _span(a: np.ndarray) -> tuple[float, float]:
    lo, hi = float(np.min(a)), float(np.max(a))
    if lo == hi:
        lo, hi = lo - DEGENERATE_PAD, hi + DEGENERATE_PAD
    return lo, hi


def extract_bounds(dataset) -> BoundSpec:
    """Exact min/max over every element, no margin; equal ends are padded apart."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    return BoundSpec(*_span(dataset.inputs), *_span(dataset.outputs))


def clamp(x: np.ndarray, bounds: BoundSpec, which: str = "input") -> np.ndarray:
    lo, hi = bounds.range(which)
    return np.clip(x, lo, hi)
