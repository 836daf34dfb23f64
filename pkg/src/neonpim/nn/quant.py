"""Fixed-point evaluation of an :class:`FcNet` with saturating arithmetic.

Values are signed two's-complement integers with ``frac_bits`` fractional bits.
Products accumulate in a wide register; each layer output is rounded back to the
narrow grid and saturated.  tanh reads a table spanning [-8, 8] with
``2**frac_bits + 1`` entries and interpolates linearly between neighbours.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fcnet import FcNet, forward

TANH_SPAN = 8.0


@dataclass(frozen=True)
class QuantSpec:
    total_bits: int = 16
    frac_bits: int = 12
    signed: bool = True

    def __post_init__(self):
        if not 0 < self.frac_bits < self.total_bits:
            raise ValueError(f"need 0 < frac_bits < total_bits, got {self.frac_bits}")

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    @property
    def qmin(self) -> int:
        return -(1 << (self.total_bits - 1)) if self.signed else 0

    @property
    def qmax(self) -> int:
        return (1 << (self.total_bits - 1)) - 1 if self.signed else (1 << self.total_bits) - 1

    @property
    def max_value(self) -> float:
        return self.qmax / self.scale


def calibrate(net: FcNet, activation_bound: float = 1.0, total_bits: int = 16,
              samples: np.ndarray | None = None) -> QuantSpec:
    """Largest ``frac_bits`` whose range holds every weight and the activation bound.

    ``samples``, if given, widens the bound to cover the inputs and every linear
    layer output seen on them.
    """
    if samples is not None:
        samples = np.atleast_2d(np.asarray(samples, np.float64))
        _, cache = forward(net, samples)
        seen = [np.abs(samples).max()] + [np.abs(o).max() for o, l in
                                          zip(cache.outputs, net.layers)
                                          if l.activation == "linear"]
        activation_bound = max(activation_bound, *map(float, seen))
    m = max(max(float(np.max(np.abs(l.weight))), float(np.max(np.abs(l.bias), initial=0.0)))
            for l in net.layers)
    m = max(m, float(activation_bound))
    int_bits = 0 if m < 1.0 else math.floor(math.log2(m)) + 1
    frac = min(max(total_bits - 1 - int_bits, 1), total_bits - 1)
    return QuantSpec(total_bits, frac, True)


@dataclass
class QuantResult:
    output: np.ndarray
    saturations: int


def _round_shift(acc: np.ndarray, bits: int) -> np.ndarray:
    # round half up, exact on int64
    return (acc + (1 << (bits - 1))) >> bits


@lru_cache(maxsize=32)
def tanh_table(frac_bits: int) -> np.ndarray:
    n = 1 << frac_bits
    grid = np.linspace(-TANH_SPAN, TANH_SPAN, n + 1)
    return np.round(np.tanh(grid) * (1 << frac_bits)).astype(np.int64)


def quant_tanh(pre: np.ndarray, spec: QuantSpec) -> np.ndarray:
    """Interpolated table lookup on integer pre-activations (scale ``2**frac_bits``)."""
    f = spec.frac_bits
    table = tanh_table(f)
    step = int(2 * TANH_SPAN)   # table spacing in integer units
    half = int(TANH_SPAN) << f
    u = np.clip(pre, -half, half) + half
    idx = u // step
    rem = u - idx * step
    idx = np.minimum(idx, len(table) - 2)
    rem = np.where(u == 2 * half, step, rem)
    lo, hi = table[idx], table[idx + 1]
    return lo + ((hi - lo) * rem + step // 2) // step


def quantize(x: np.ndarray, spec: QuantSpec) -> tuple[np.ndarray, int]:
    q = np.round(np.asarray(x, np.float64) * spec.scale)
    sat = int(np.count_nonzero((q < spec.qmin) | (q > spec.qmax)))
    return np.clip(q, spec.qmin, spec.qmax).astype(np.int64), sat


def quantize_eval(net: FcNet, spec: QuantSpec, x: np.ndarray) -> QuantResult:
    x = np.asarray(x, np.float64)
    squeeze = x.ndim == 1
    a, sat = quantize(x[None] if squeeze else x, spec)
    f = spec.frac_bits
    for layer in net.layers:
        w, s1 = quantize(layer.weight, spec)
        b, s2 = quantize(layer.bias, spec)
        sat += s1 + s2
        acc = a @ w.T + (b << f)          # scale 2**(2f)
        pre = _round_shift(acc, f)        # scale 2**f, still wide
        if layer.activation == "tanh":
            a = quant_tanh(pre, spec)
        elif layer.activation != "linear":
            raise ValueError(f"no fixed-point path for {layer.activation!r}")
        else:
            sat += int(np.count_nonzero((pre < spec.qmin) | (pre > spec.qmax)))
            a = np.clip(pre, spec.qmin, spec.qmax)
    out = a.astype(np.float64) / spec.scale
    return QuantResult(out[0] if squeeze else out, sat)
