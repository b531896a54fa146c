"""Robustness verdicts, the enumeration oracle, and maximum-robustness-radius search."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .encoder import build_verification_model
from .quant import QuantizedNetwork, qnn_forward
from .region import InputRegionSpec, Norm, PropertyKind, PropertySpec, max_radius
from .solver import Status, solve

BRUTE_FORCE_CAP = 10**6


class VerdictStatus(str, enum.Enum):
    ROBUST = "robust"
    NON_ROBUST = "non-robust"
    TIMEOUT = "timeout"


@dataclass
class VerifyStats:
    encode_time: float = 0.0
    solve_time: float = 0.0
    booleans: int = 0
    booleans_total: int = 0
    product_terms: int = 0
    nodes: int = 0
    evaluations: int = 0


@dataclass
class Verdict:
    status: VerdictStatus
    counterexample: tuple | None = None
    stats: VerifyStats = field(default_factory=VerifyStats)

    @property
    def robust(self) -> bool:
        return self.status is VerdictStatus.ROBUST


class RegionTooLarge(ValueError):
    pass


def _region(qnn, center, radius, norm) -> InputRegionSpec:
    spec = InputRegionSpec(tuple(center), int(radius), Norm.parse(norm.value if isinstance(norm, Norm) else norm))
    if len(spec.center) != qnn.n_inputs:
        raise ValueError(f"sample has {len(spec.center)} entries, network {qnn.n_inputs} inputs")
    spec.check_grid(qnn.cfg_in)
    return spec


def property_for(qnn: QuantizedNetwork, center: Sequence[int], kind="class") -> PropertySpec:
    return PropertySpec.for_output(kind, qnn_forward(qnn, list(center)))


def validate_counterexample(qnn, center, x, radius, norm, kind="class") -> bool:
    """True iff ``x`` lies in the region and really breaks the property."""
    try:
        spec = _region(qnn, center, radius, norm)
        x = tuple(x)
        if not spec.contains(x, qnn.cfg_in):
            return False
        return property_for(qnn, center, kind).violated_by(qnn_forward(qnn, list(x)))
    except (ValueError, TypeError):
        return False


def verify_robustness(
    qnn: QuantizedNetwork,
    center: Sequence[int],
    radius: int,
    norm="inf",
    kind="class",
    use_ia: bool = True,
    timeout: float | None = None,
    deadline: float | None = None,
) -> Verdict:
    """Decide robustness on the region by solving the verification ILP.

    ``timeout`` (seconds from now) and ``deadline`` (absolute
    :func:`time.monotonic`) both bound the solve; the earlier one wins.
    """
    spec = _region(qnn, center, radius, norm)
    prop = property_for(qnn, center, kind)
    if timeout is not None:
        t = time.monotonic() + timeout
        deadline = t if deadline is None else min(deadline, t)
    if spec.radius == 0:
        return Verdict(VerdictStatus.ROBUST)
    if deadline is not None and time.monotonic() >= deadline:
        return Verdict(VerdictStatus.TIMEOUT)

    t0 = time.monotonic()
    enc = build_verification_model(qnn, spec, prop, use_ia=use_ia)
    stats = VerifyStats(
        encode_time=time.monotonic() - t0,
        booleans=enc.booleans,
        booleans_total=enc.total_booleans,
        product_terms=enc.product_terms,
    )
    res = solve(enc.model, deadline)
    stats.solve_time = res.stats.elapsed
    stats.nodes = res.stats.nodes
    if res.status is Status.TIMEOUT:
        return Verdict(VerdictStatus.TIMEOUT, stats=stats)
    if res.status is Status.INFEASIBLE:
        return Verdict(VerdictStatus.ROBUST, stats=stats)
    x = tuple(res.assignment[v] for v in enc.input_vars)
    if not validate_counterexample(qnn, spec.center, x, spec.radius, spec.norm, kind):
        raise AssertionError(f"solver witness {x} does not violate the property")
    return Verdict(VerdictStatus.NON_ROBUST, x, stats)


def brute_force_verify(
    qnn: QuantizedNetwork,
    center: Sequence[int],
    radius: int,
    norm="inf",
    kind="class",
    cap: int = BRUTE_FORCE_CAP,
) -> Verdict:
    """Enumerate the region and run the network on every point."""
    spec = _region(qnn, center, radius, norm)
    if spec.size_of_box(qnn.cfg_in) > cap:
        raise RegionTooLarge(f"region box has more than {cap} points")
    prop = property_for(qnn, center, kind)
    stats = VerifyStats()
    t0 = time.monotonic()
    for x in spec.points(qnn.cfg_in):
        stats.evaluations += 1
        if prop.violated_by(qnn_forward(qnn, list(x))):
            stats.solve_time = time.monotonic() - t0
            return Verdict(VerdictStatus.NON_ROBUST, tuple(x), stats)
    stats.solve_time = time.monotonic() - t0
    return Verdict(VerdictStatus.ROBUST, stats=stats)


@dataclass
class MrrResult:
    radius: int | None
    probes: list = field(default_factory=list)  # (radius, VerdictStatus) in call order
    saturated: bool = False  # robust on the whole grid; radius is the covering radius
    timed_out: bool = False


class _ProbeTimeout(Exception):
    pass


def compute_mrr(
    qnn: QuantizedNetwork,
    center: Sequence[int],
    norm="inf",
    start_r: int = 10,
    step: int = 10,
    kind="class",
    use_ia: bool = True,
    timeout: float | None = None,
    verifier: Callable[[int], VerdictStatus] | None = None,
) -> MrrResult:
    """Largest radius that is robust while the next one is not.

    Expands ``[lo, hi]`` by ``step`` from ``[1, start_r]`` until the upper
    probe fails, then bisects.  Probing stops at the radius whose region
    already covers the whole input grid.  ``verifier`` replaces the ILP
    check (it maps a radius to a status), which is handy for stubs.
    """
    if start_r < 1 or step < 1:
        raise ValueError("start_r and step must be at least 1")
    norm = Norm.parse(norm.value if isinstance(norm, Norm) else norm)
    cap = max_radius(center, norm, qnn.cfg_in)
    deadline = None if timeout is None else time.monotonic() + timeout
    result = MrrResult(None)
    seen = {}

    if verifier is None:

        def verifier(r):
            return verify_robustness(qnn, center, r, norm, kind, use_ia, deadline=deadline).status

    def robust(r) -> bool:
        if r not in seen:
            status = verifier(r)
            result.probes.append((r, status))
            seen[r] = status
            if status is VerdictStatus.TIMEOUT:
                raise _ProbeTimeout
        return seen[r] is VerdictStatus.ROBUST

    try:
        if cap == 0:
            result.radius, result.saturated = 0, True
            return result
        if not robust(1):
            result.radius = 0
            return result
        lo, hi = 1, min(start_r, cap)
        while True:
            if hi <= lo:
                if lo >= cap:
                    result.radius, result.saturated = cap, True
                    return result
                hi = min(lo + step, cap)
                continue
            if not robust(hi):
                break
            if hi >= cap:
                result.radius, result.saturated = cap, True
                return result
            lo, hi = hi, min(hi + step, cap)
        while hi > lo + 1:
            mid = lo + (hi - lo) // 2
            if robust(mid):
                lo = mid
            else:
                hi = mid
        result.radius = lo
        return result
    except _ProbeTimeout:
        result.timed_out = True
        return result


__all__ = [
    "BRUTE_FORCE_CAP",
    "MrrResult",
    "PropertyKind",
    "RegionTooLarge",
    "Verdict",
    "VerdictStatus",
    "VerifyStats",
    "brute_force_verify",
    "compute_mrr",
    "property_for",
    "validate_counterexample",
    "verify_robustness",
]
