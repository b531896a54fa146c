"""Fixed-point semantics of ReLU networks and their quantized counterparts.

Everything on the quantized path is exact: values are Python ints and the
power-of-two rescaling is carried as a :class:`fractions.Fraction`, so the
forward pass agrees bit-for-bit with the ILP encoding.  Rounding is half-up
(ties go toward +inf) everywhere in the package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence, Union

Number = Union[int, Fraction]


class QuantizationError(ValueError):
    """A value or parameter does not fit the grid of its configuration."""


@dataclass(frozen=True)
class QuantConfig:
    """A quantization scheme: signedness, total bits ``Q``, fractional bits ``F``."""

    signed: bool
    total_bits: int
    frac_bits: int

    def __post_init__(self):
        if self.total_bits < 1:
            raise ValueError(f"total_bits must be positive, got {self.total_bits}")
        if not 0 <= self.frac_bits <= self.total_bits:
            raise ValueError(
                f"frac_bits must lie in [0, {self.total_bits}], got {self.frac_bits}"
            )

    def lb(self) -> int:
        return -(2 ** (self.total_bits - 1)) if self.signed else 0

    def ub(self) -> int:
        return 2 ** (self.total_bits - 1) - 1 if self.signed else 2**self.total_bits - 1

    def contains(self, v: int) -> bool:
        return self.lb() <= v <= self.ub()

    def to_json(self) -> dict:
        return {"sign": "+-" if self.signed else "+", "Q": self.total_bits, "F": self.frac_bits}

    @classmethod
    def from_json(cls, obj: dict) -> "QuantConfig":
        sign = obj["sign"]
        if sign not in ("+", "+-", "±"):
            raise ValueError(f"unknown signedness {sign!r}")
        return cls(sign != "+", int(obj["Q"]), int(obj["F"]))

    def __str__(self):
        return f"<{'±' if self.signed else '+'},{self.total_bits},{self.frac_bits}>"


def clamp(u, lo, hi):
    if lo > hi:
        raise ValueError(f"empty clamp range [{lo}, {hi}]")
    if u < lo:
        return lo
    if u > hi:
        return hi
    return u


def round_half_up(q: Number) -> int:
    """The integer ``t`` with ``q`` in ``[t - 1/2, t + 1/2)``."""
    return math.floor(Fraction(q) + Fraction(1, 2))


def to_fraction(u) -> Fraction:
    # floats go through repr so that 0.616 means 616/1000, not its binary expansion
    if isinstance(u, float):
        return Fraction(repr(u))
    return Fraction(u)


def quantize_value(u, cfg: QuantConfig) -> int:
    return clamp(round_half_up(to_fraction(u) * 2**cfg.frac_bits), cfg.lb(), cfg.ub())


@dataclass(frozen=True)
class RealNetwork:
    """Real-valued feed-forward ReLU network.

    ``weights[i]`` maps layer ``i`` to layer ``i+1`` and has shape
    ``(arch[i+1], arch[i])``; ``biases[i]`` has length ``arch[i+1]``.
    """

    arch: tuple
    weights: tuple
    biases: tuple

    def __post_init__(self):
        _check_dims(self.arch, self.weights, self.biases)

    @property
    def depth(self) -> int:
        return len(self.arch)


@dataclass(frozen=True)
class QuantizedNetwork:
    """Integer weights and biases plus the quantization configs of every role."""

    arch: tuple
    weights: tuple
    biases: tuple
    cfg_in: QuantConfig
    cfg_w: QuantConfig
    cfg_b: QuantConfig
    cfg_out_hidden: QuantConfig
    cfg_out_last: QuantConfig
    name: str = field(default="", compare=False)

    def __post_init__(self):
        _check_dims(self.arch, self.weights, self.biases)
        for li, (rows, bias) in enumerate(zip(self.weights, self.biases)):
            for row in rows:
                for w in row:
                    if not isinstance(w, int) or not self.cfg_w.contains(w):
                        raise QuantizationError(
                            f"layer {li + 2}: weight {w} outside {self.cfg_w} grid"
                        )
            for b in bias:
                if not isinstance(b, int) or not self.cfg_b.contains(b):
                    raise QuantizationError(f"layer {li + 2}: bias {b} outside {self.cfg_b} grid")

    @property
    def depth(self) -> int:
        """Number of layers ``d`` including the input layer."""
        return len(self.arch)

    @property
    def n_inputs(self) -> int:
        return self.arch[0]

    @property
    def n_outputs(self) -> int:
        return self.arch[-1]

    def layer_scale(self, i: int) -> Fraction:
        """Precision-alignment factor ``2^F_i`` of layer ``i`` (2-based)."""
        if not 2 <= i <= self.depth:
            raise IndexError(f"layer {i} out of range 2..{self.depth}")
        f_out = self.out_cfg(i).frac_bits
        if i == 2:
            e = f_out - self.cfg_in.frac_bits - self.cfg_w.frac_bits
        else:
            e = -self.cfg_w.frac_bits
        return Fraction(2) ** e

    def bias_scale(self, i: int) -> Fraction:
        return Fraction(2) ** (self.out_cfg(i).frac_bits - self.cfg_b.frac_bits)

    def out_cfg(self, i: int) -> QuantConfig:
        return self.cfg_out_last if i == self.depth else self.cfg_out_hidden

    def out_range(self, i: int) -> tuple:
        """Clamp range ``(lb, C_out^ub)`` of layer ``i``; hidden layers clamp at 0."""
        cfg = self.out_cfg(i)
        return (cfg.lb() if i == self.depth else 0), cfg.ub()

    def layer(self, i: int) -> tuple:
        """``(W, b)`` of layer ``i`` in 2-based numbering."""
        return self.weights[i - 2], self.biases[i - 2]


def _check_dims(arch, weights, biases):
    if len(arch) < 2:
        raise ValueError("a network needs at least an input and an output layer")
    if len(weights) != len(arch) - 1 or len(biases) != len(arch) - 1:
        raise ValueError(
            f"arch {list(arch)} needs {len(arch) - 1} layers, got "
            f"{len(weights)} weight matrices and {len(biases)} bias vectors"
        )
    for li, (W, b) in enumerate(zip(weights, biases)):
        n_in, n_out = arch[li], arch[li + 1]
        if len(W) != n_out or any(len(row) != n_in for row in W):
            raise ValueError(f"layer {li + 2}: weight matrix is not {n_out}x{n_in}")
        if len(b) != n_out:
            raise ValueError(f"layer {li + 2}: bias vector is not of length {n_out}")


def quantize_network(
    dnn: RealNetwork,
    cfg_w: QuantConfig,
    cfg_b: QuantConfig,
    cfg_in: QuantConfig,
    cfg_out_hidden: QuantConfig,
    cfg_out_last: QuantConfig | None = None,
    strict: bool = False,
) -> QuantizedNetwork:
    """Quantize every weight and bias entrywise.

    With ``strict=True`` an entry that would saturate at its grid limit raises
    :class:`QuantizationError` instead of being clamped.
    """
    cfg_out_last = cfg_out_last or cfg_out_hidden

    def q(u, cfg, what):
        v = round_half_up(to_fraction(u) * 2**cfg.frac_bits)
        if strict and not cfg.contains(v):
            raise QuantizationError(f"{what} {u} quantizes to {v}, outside {cfg}")
        return clamp(v, cfg.lb(), cfg.ub())

    weights = tuple(
        tuple(tuple(q(w, cfg_w, "weight") for w in row) for row in W) for W in dnn.weights
    )
    biases = tuple(tuple(q(b, cfg_b, "bias") for b in bv) for bv in dnn.biases)
    return QuantizedNetwork(
        tuple(dnn.arch), weights, biases, cfg_in, cfg_w, cfg_b, cfg_out_hidden, cfg_out_last
    )


def real_forward(dnn: RealNetwork, x: Sequence) -> list:
    if len(x) != dnn.arch[0]:
        raise ValueError(f"expected {dnn.arch[0]} inputs, got {len(x)}")
    y = [to_fraction(v) for v in x]
    last = len(dnn.weights) - 1
    for li, (W, b) in enumerate(zip(dnn.weights, dnn.biases)):
        z = [sum((to_fraction(w) * v for w, v in zip(row, y)), to_fraction(bj)) for row, bj in zip(W, b)]
        y = z if li == last else [max(v, Fraction(0)) for v in z]
    return y


def pre_activation(qnn: QuantizedNetwork, i: int, j: int, prev: Sequence[int]) -> Fraction:
    """Rational pre-activation of neuron ``j`` (0-based) in layer ``i``."""
    W, b = qnn.layer(i)
    acc = sum(w * v for w, v in zip(W[j], prev))
    return qnn.layer_scale(i) * acc + qnn.bias_scale(i) * b[j]


def layer_forward(qnn: QuantizedNetwork, i: int, prev: Sequence[int]) -> list:
    lo, hi = qnn.out_range(i)
    W, _ = qnn.layer(i)
    return [clamp(round_half_up(pre_activation(qnn, i, j, prev)), lo, hi) for j in range(len(W))]


def qnn_trace(qnn: QuantizedNetwork, x: Sequence[int]) -> list:
    """Outputs of every layer, ``[x, y^2, ..., y^d]``."""
    if len(x) != qnn.n_inputs:
        raise ValueError(f"expected {qnn.n_inputs} inputs, got {len(x)}")
    for v in x:
        if not isinstance(v, int) or not qnn.cfg_in.contains(v):
            raise QuantizationError(f"input {v} outside {qnn.cfg_in} grid")
    trace = [list(x)]
    for i in range(2, qnn.depth + 1):
        trace.append(layer_forward(qnn, i, trace[-1]))
    return trace


def qnn_forward(qnn: QuantizedNetwork, x: Sequence[int]) -> list:
    return qnn_trace(qnn, x)[-1]


def classify(output: Sequence) -> int:
    """1-based index of the first maximal entry."""
    if len(output) == 0:
        raise ValueError("cannot classify an empty output")
    best = 0
    for k in range(1, len(output)):
        if output[k] > output[best]:
            best = k
    return best + 1


# --- model files -----------------------------------------------------------

CFG_KEYS = ("cfg_in", "cfg_w", "cfg_b", "cfg_out_hidden", "cfg_out_last")


def qnn_to_json(qnn: QuantizedNetwork) -> dict:
    doc = {"arch": list(qnn.arch)}
    for key in CFG_KEYS:
        doc[key] = getattr(qnn, key).to_json()
    doc["layers"] = [
        {"W": [list(row) for row in W], "b": list(b)} for W, b in zip(qnn.weights, qnn.biases)
    ]
    return doc


def qnn_from_json(doc: dict, name: str = "") -> QuantizedNetwork:
    try:
        arch = tuple(int(n) for n in doc["arch"])
        cfgs = {key: QuantConfig.from_json(doc[key]) for key in CFG_KEYS}
        layers = doc["layers"]
    except KeyError as e:
        raise ValueError(f"model file is missing key {e}") from None
    if len(arch) == len(layers) + 2 and arch[0] == arch[1]:
        # paper-style widths n_1..n_{d+1}, where the identity input layer repeats n_1
        arch = arch[1:]
    weights, biases = [], []
    for layer in layers:
        for v in (x for row in layer["W"] for x in row):
            if not isinstance(v, int) or isinstance(v, bool):
                raise ValueError(f"weight {v!r} is not an integer")
        weights.append(tuple(tuple(row) for row in layer["W"]))
        biases.append(tuple(layer["b"]))
    return QuantizedNetwork(arch, tuple(weights), tuple(biases), name=name, **cfgs)


def load_qnn(path) -> QuantizedNetwork:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        return qnn_from_json(json.load(fh), name=path.stem)


def dumps_model(doc: dict) -> str:
    """JSON text with one line per top-level key and one line per layer."""
    lines = []
    for key, value in doc.items():
        if key.startswith("layers"):
            inner = ",\n".join("  " + json.dumps(layer) for layer in value)
            lines.append(f' "{key}": [\n{inner}\n ]')
        else:
            lines.append(f" {json.dumps(key)}: {json.dumps(value)}")
    return "{\n" + ",\n".join(lines) + "\n}\n"


def save_qnn(qnn: QuantizedNetwork, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(qnn_to_json(qnn)))


def real_from_json(doc: dict) -> RealNetwork:
    """Read the ``layers_real`` variant of the model format (decimal strings)."""
    arch = tuple(int(n) for n in doc["arch"])
    if len(arch) == len(doc["layers_real"]) + 2 and arch[0] == arch[1]:
        arch = arch[1:]
    weights = tuple(
        tuple(tuple(Fraction(str(w)) for w in row) for row in layer["W"])
        for layer in doc["layers_real"]
    )
    biases = tuple(tuple(Fraction(str(b)) for b in layer["b"]) for layer in doc["layers_real"])
    return RealNetwork(arch, weights, biases)


def load_real(path) -> RealNetwork:
    with open(path, encoding="utf-8") as fh:
        return real_from_json(json.load(fh))
