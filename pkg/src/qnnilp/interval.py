"""Interval analysis over the quantized network.

Bounds are integers on post-activation values.  Both rounding and clamping
are monotone, so pushing the exact rational pre-activation bounds through
them brackets every reachable neuron value.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .quant import QuantConfig, QuantizedNetwork, clamp, round_half_up
from .region import InputRegionSpec, Norm


@dataclass(frozen=True)
class IntervalBounds:
    """``layers[0]`` holds the input intervals, ``layers[i-1]`` those of layer ``i``."""

    layers: tuple

    def neuron(self, i: int, j: int) -> tuple:
        """Bounds of neuron ``j`` (0-based) of layer ``i`` (1-based)."""
        return self.layers[i - 1][j]

    def widths(self) -> list:
        return [[hi - lo + 1 for lo, hi in layer] for layer in self.layers]


class NeuronState(str, enum.Enum):
    ACTIVE = "active"
    CLAMPED_LOW = "clamped_low"
    CLAMPED_HIGH = "clamped_high"
    FIXED = "fixed"


def input_intervals(spec: InputRegionSpec, cfg_in: QuantConfig) -> list:
    lo, hi = cfg_in.lb(), cfg_in.ub()
    r = spec.radius
    if spec.norm is Norm.L0:
        return [(u, u) if r == 0 else (lo, hi) for u in spec.center]
    if spec.norm in (Norm.L1, Norm.LINF, Norm.L2):
        # for L2 the coordinate offset can reach r itself, not only floor(sqrt(r))
        return [(clamp(u - r, lo, hi), clamp(u + r, lo, hi)) for u in spec.center]
    raise ValueError(f"unsupported norm {spec.norm}")


def propagate(qnn: QuantizedNetwork, intervals) -> IntervalBounds:
    intervals = [tuple(iv) for iv in intervals]
    if len(intervals) != qnn.n_inputs:
        raise ValueError(f"expected {qnn.n_inputs} input intervals, got {len(intervals)}")
    layers = [tuple(intervals)]
    for i in range(2, qnn.depth + 1):
        out_lo, out_hi = qnn.out_range(i)
        layer = []
        for j in range(qnn.arch[i - 1]):
            zlo, zhi = pre_activation_bounds(qnn, i, j, layers[-1])
            layer.append(
                (
                    clamp(round_half_up(zlo), out_lo, out_hi),
                    clamp(round_half_up(zhi), out_lo, out_hi),
                )
            )
        layers.append(tuple(layer))
    return IntervalBounds(tuple(layers))


def region_bounds(qnn: QuantizedNetwork, spec: InputRegionSpec) -> IntervalBounds:
    return propagate(qnn, input_intervals(spec, qnn.cfg_in))


def classify_neuron(bounds: tuple, clamp_range: tuple) -> NeuronState:
    """Classify a neuron from its bounds and the ``(lb, ub)`` clamp range of its layer."""
    lo, hi = bounds
    lb, ub = clamp_range
    if hi <= lb:
        return NeuronState.CLAMPED_LOW
    if lo >= ub:
        return NeuronState.CLAMPED_HIGH
    if lo == hi:
        return NeuronState.FIXED
    return NeuronState.ACTIVE


def pre_activation_bounds(qnn: QuantizedNetwork, i: int, j: int, prev) -> tuple:
    """Exact rational range of a neuron's pre-activation given predecessor intervals."""
    W, b = qnn.layer(i)
    lo_acc = sum(w * (p[0] if w > 0 else p[1]) for w, p in zip(W[j], prev))
    hi_acc = sum(w * (p[1] if w > 0 else p[0]) for w, p in zip(W[j], prev))
    bias = qnn.bias_scale(i) * b[j]
    return qnn.layer_scale(i) * lo_acc + bias, qnn.layer_scale(i) * hi_acc + bias

