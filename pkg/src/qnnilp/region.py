"""Input regions around a quantized sample and the robustness properties checked on them."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from .quant import QuantConfig, classify


class Norm(str, enum.Enum):
    L0 = "0"
    L1 = "1"
    L2 = "2"
    LINF = "inf"

    @classmethod
    def parse(cls, text) -> "Norm":
        key = str(text).strip().lower()
        aliases = {"0": cls.L0, "1": cls.L1, "2": cls.L2, "inf": cls.LINF, "oo": cls.LINF}
        if key not in aliases:
            raise ValueError(f"unsupported norm {text!r}; use 0, 1, 2 or inf")
        return aliases[key]


@dataclass(frozen=True)
class InputRegionSpec:
    """Grid points within L_p distance ``radius`` of ``center``."""

    center: tuple
    radius: int
    norm: Norm

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be non-negative")
        object.__setattr__(self, "center", tuple(self.center))
        object.__setattr__(self, "norm", Norm.parse(self.norm.value if isinstance(self.norm, Norm) else self.norm))

    def check_grid(self, cfg: QuantConfig) -> None:
        for u in self.center:
            if not isinstance(u, int) or not cfg.contains(u):
                raise ValueError(f"centre entry {u} outside {cfg} grid")

    def within_distance(self, x: Sequence[int]) -> bool:
        diff = [a - b for a, b in zip(x, self.center)]
        r = self.radius
        if self.norm is Norm.L0:
            return sum(1 for d in diff if d) <= r
        if self.norm is Norm.L1:
            return sum(abs(d) for d in diff) <= r
        if self.norm is Norm.L2:
            return sum(d * d for d in diff) <= r * r
        return max((abs(d) for d in diff), default=0) <= r

    def contains(self, x: Sequence[int], cfg: QuantConfig) -> bool:
        return (
            len(x) == len(self.center)
            and all(isinstance(v, int) and cfg.contains(v) for v in x)
            and self.within_distance(x)
        )

    def box(self, cfg: QuantConfig) -> list:
        """Per-coordinate range containing the region (grid-clipped)."""
        lo, hi = cfg.lb(), cfg.ub()
        if self.norm is Norm.L0:
            return [(u, u) if self.radius == 0 else (lo, hi) for u in self.center]
        return [(max(u - self.radius, lo), min(u + self.radius, hi)) for u in self.center]

    def size_of_box(self, cfg: QuantConfig) -> int:
        return math.prod(hi - lo + 1 for lo, hi in self.box(cfg))

    def points(self, cfg: QuantConfig):
        """Iterate over every grid point of the region, in lexicographic order."""
        ranges = [range(lo, hi + 1) for lo, hi in self.box(cfg)]
        for x in itertools.product(*ranges):
            if self.within_distance(x):
                yield x


def max_radius(center: Sequence[int], norm: Norm, cfg: QuantConfig) -> int:
    """Smallest radius whose region already covers the whole input grid."""
    far = [max(u - cfg.lb(), cfg.ub() - u) for u in center]
    norm = Norm.parse(norm.value if isinstance(norm, Norm) else norm)
    if norm is Norm.LINF:
        return max(far, default=0)
    if norm is Norm.L1:
        return sum(far)
    if norm is Norm.L0:
        return sum(1 for f in far if f > 0)
    sq = sum(f * f for f in far)
    r = math.isqrt(sq)
    return r if r * r == sq else r + 1


class PropertyKind(str, enum.Enum):
    OUTPUT = "output"
    CLASS = "class"


@dataclass(frozen=True)
class PropertySpec:
    """What counts as a violation: any output change, or a change of predicted class."""

    kind: PropertyKind
    reference: tuple = ()
    target: int = 0
    arity: int = 0

    @classmethod
    def output_difference(cls, reference: Sequence[int]) -> "PropertySpec":
        return cls(PropertyKind.OUTPUT, reference=tuple(reference), arity=len(reference))

    @classmethod
    def misclassification(cls, target: int, arity: int) -> "PropertySpec":
        if not 1 <= target <= arity:
            raise ValueError(f"class {target} outside 1..{arity}")
        return cls(PropertyKind.CLASS, target=target, arity=arity)

    @classmethod
    def for_output(cls, kind, center_output: Sequence[int]) -> "PropertySpec":
        """Property relative to the network's own output at the region centre."""
        kind = PropertyKind(kind)
        if kind is PropertyKind.OUTPUT:
            return cls.output_difference(center_output)
        return cls.misclassification(classify(center_output), len(center_output))

    def violated_by(self, output: Sequence[int]) -> bool:
        if len(output) != self.arity:
            raise ValueError(f"output arity {len(output)} != property arity {self.arity}")
        if self.kind is PropertyKind.OUTPUT:
            return tuple(output) != self.reference
        return classify(output) != self.target
