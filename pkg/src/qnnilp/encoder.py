"""Translate a quantized network, an input region and a robustness property into one ILP.

Each non-input neuron becomes a staircase (piecewise-constant) function of
its rational pre-activation, encoded with one boolean per step and four
linear rows.  Interval bounds, when supplied, truncate the staircases and
turn neurons whose bounds collapse into constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .ilp import IlpModel, Kind, LinExpr, Rel, normalize
from .interval import IntervalBounds, pre_activation_bounds, region_bounds
from .quant import QuantConfig, QuantizedNetwork
from .region import InputRegionSpec, Norm, PropertyKind, PropertySpec

INF = math.inf
HALF = Fraction(1, 2)


@dataclass(frozen=True)
class PiecewiseConstant:
    """``values[k]`` on ``[breakpoints[k], breakpoints[k+1])``; the ends may be -inf/+inf."""

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        if len(self.values) < 1:
            raise ValueError("a piecewise constant function needs at least one piece")
        if len(self.breakpoints) != len(self.values) + 1:
            raise ValueError("need exactly one more breakpoint than values")
        if any(a >= b for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(a in (INF, -INF) for a in self.breakpoints[1:-1]):
            raise ValueError("only the outer breakpoints may be infinite")

    @property
    def k(self) -> int:
        return len(self.values)

    def __call__(self, x) -> int:
        a = self.breakpoints
        if not a[0] <= x < a[-1]:
            raise ValueError(f"{x} outside the domain [{a[0]}, {a[-1]})")
        for xi in range(self.k):
            if x < a[xi + 1]:
                return self.values[xi]
        raise AssertionError("unreachable")


def staircase(lo: int, hi: int) -> PiecewiseConstant:
    """``clamp(round_half_up(z), lo, hi)`` as a function of the rational ``z``."""
    if lo > hi:
        raise ValueError(f"empty staircase [{lo}, {hi}]")
    inner = tuple(Fraction(t) + HALF for t in range(lo, hi))
    return PiecewiseConstant((-INF,) + inner + (INF,), tuple(range(lo, hi + 1)))


def _tight_m(expr: LinExpr, model: IlpModel) -> int:
    lo, hi = expr.bounds(model.lower, model.upper)
    return 1 + math.ceil(max(abs(lo), abs(hi)))


@dataclass
class PcfEncoding:
    booleans: list
    constraints: list


def encode_piecewise_constant(
    f: PiecewiseConstant,
    x: LinExpr,
    y,
    model: IlpModel,
    big_m: int | None = None,
    name: str = "f",
) -> PcfEncoding:
    """Add the four rows forcing ``y == f(x)``.

    ``y`` is a variable id or an affine expression.  Infinite outer
    breakpoints are replaced by ``-M``/``+M``; without an explicit ``big_m``
    the smallest safe ``M`` is derived from the variable bounds of ``x``.
    """
    x = x if isinstance(x, LinExpr) else LinExpr.var(x)
    y = y if isinstance(y, LinExpr) else LinExpr.var(y)
    a = list(f.breakpoints)
    if a[0] == -INF or a[-1] == INF:
        m = big_m if big_m is not None else _tight_m(x, model)
        if a[0] == -INF:
            a[0] = -m
        if a[-1] == INF:
            a[-1] = m
    vs = [model.add_bool(f"{name}_{xi + 1}") for xi in range(f.k)]
    rows = [
        model.add_constraint(LinExpr.weighted((1, v) for v in vs), Rel.EQ, 1, f"{name}_one"),
        model.add_relation(y, Rel.EQ, LinExpr.weighted(zip(f.values, vs)), f"{name}_val"),
        model.add_relation(x, Rel.LT, LinExpr.weighted(zip(a[1:], vs)), f"{name}_hi"),
        model.add_relation(x, Rel.GE, LinExpr.weighted(zip(a[:-1], vs)), f"{name}_lo"),
    ]
    return PcfEncoding(vs, rows)


def neuron_pcf(
    qnn: QuantizedNetwork, i: int, j: int, bounds: IntervalBounds | None = None
) -> PiecewiseConstant:
    if not 2 <= i <= qnn.depth:
        raise IndexError(f"layer {i} has no staircase (valid: 2..{qnn.depth})")
    lo, hi = qnn.out_range(i)
    if bounds is not None:
        lo, hi = bounds.neuron(i, j)
    return staircase(lo, hi)


def default_big_m(qnn: QuantizedNetwork) -> int:
    """Model-wide M for encodings built without interval bounds.

    The textbook heuristic ``2 * span * width * max|w|`` is raised, when
    necessary, to one more than the largest pre-activation magnitude any grid
    input can produce, so M always dominates.
    """
    span = max(qnn.cfg_out_hidden.ub() - 0, qnn.cfg_out_last.ub() - qnn.cfg_out_last.lb())
    width = max(qnn.arch)
    wmax = max((abs(w) for W in qnn.weights for row in W for w in row), default=0)
    heuristic = 2 * span * width * wmax
    prev = [(qnn.cfg_in.lb(), qnn.cfg_in.ub())] * qnn.n_inputs
    safe = 0
    for i in range(2, qnn.depth + 1):
        for j in range(qnn.arch[i - 1]):
            lo, hi = pre_activation_bounds(qnn, i, j, prev)
            safe = max(safe, abs(lo), abs(hi))
        prev = [qnn.out_range(i)] * qnn.arch[i - 1]
    # property rows compare outputs, whose differences span the output grid
    return max(heuristic, 1 + math.ceil(safe), span + 2)


@dataclass
class NetworkEncoding:
    output_vars: list
    neuron_terms: dict  # (layer, neuron) -> LinExpr (a variable or a constant)
    staircases: dict  # (layer, neuron) -> boolean ids
    constraints: list
    booleans: int = 0
    product_terms: int = 0
    variables: int = 0


def encode_network(
    qnn: QuantizedNetwork,
    bounds: IntervalBounds | None,
    model: IlpModel,
    input_vars: Sequence[int],
    big_m: int | None = None,
) -> NetworkEncoding:
    """Encode every layer; the identity input layer is the input variables themselves."""
    if len(input_vars) != qnn.n_inputs:
        raise ValueError(f"network has {qnn.n_inputs} inputs, got {len(input_vars)} variables")
    prev = [LinExpr.var(v) for v in input_vars]
    enc = NetworkEncoding([], {}, {}, [], variables=len(input_vars))
    for j, term in enumerate(prev):
        enc.neuron_terms[(1, j)] = term
    if bounds is None:
        big_m = big_m if big_m is not None else model.big_M
    for i in range(2, qnn.depth + 1):
        W, b = qnn.layer(i)
        scale, bscale = qnn.layer_scale(i), qnn.bias_scale(i)
        out_lo, out_hi = qnn.out_range(i)
        last = i == qnn.depth
        layer = []
        for j, row in enumerate(W):
            lo, hi = bounds.neuron(i, j) if bounds is not None else (out_lo, out_hi)
            name = f"y{i}_{j + 1}"
            if lo == hi:
                # collapsed neuron: a constant downstream, no booleans
                if last:
                    v = model.add_var(name, lo, lo)
                    enc.output_vars.append(v)
                    enc.variables += 1
                    layer.append(LinExpr.var(v))
                else:
                    layer.append(LinExpr(const=lo))
                enc.neuron_terms[(i, j)] = layer[-1]
                continue
            z = LinExpr(const=bscale * b[j])
            for w, term in zip(row, prev):
                if w:
                    z = z + term * (scale * w)
                    if term.coefs:
                        enc.product_terms += 1
            y = model.add_var(name, lo, hi)
            pcf = encode_piecewise_constant(
                staircase(lo, hi), z, y, model, big_m=big_m, name=f"v{i}_{j + 1}"
            )
            enc.staircases[(i, j)] = pcf.booleans
            enc.constraints.extend(pcf.constraints)
            enc.booleans += len(pcf.booleans)
            enc.variables += 1 + len(pcf.booleans)
            layer.append(LinExpr.var(y))
            enc.neuron_terms[(i, j)] = layer[-1]
            if last:
                enc.output_vars.append(y)
        prev = layer
    return enc


@dataclass
class RegionEncoding:
    bounds: dict  # input var -> (lo, hi) imposed on it
    constraints: list
    aux_vars: list
    quadratics: list = field(default_factory=list)


def encode_input_region(
    spec: InputRegionSpec, cfg_in: QuantConfig, model: IlpModel, input_vars: Sequence[int]
) -> RegionEncoding:
    if len(input_vars) != len(spec.center):
        raise ValueError("region centre and input variables differ in length")
    glo, ghi = cfg_in.lb(), cfg_in.ub()
    u, r, norm = spec.center, spec.radius, spec.norm
    enc = RegionEncoding({}, [], [])

    def bound(v, lo, hi):
        model.set_bounds(v, lo, hi)
        enc.bounds[v] = (lo, hi)

    if r == 0:
        for v, c in zip(input_vars, u):
            bound(v, c, c)
        return enc
    if norm is Norm.LINF or norm is Norm.L2:
        for v, c in zip(input_vars, u):
            bound(v, max(c - r, glo), min(c + r, ghi))
        if norm is Norm.L2:
            enc.quadratics.append(
                model.add_quadratic(zip(input_vars, u), r * r, name="l2_ball")
            )
        return enc
    if norm is Norm.L1:
        for k, (v, c) in enumerate(zip(input_vars, u)):
            bound(v, glo, ghi)
            d = model.add_var(f"d{k + 1}", 0, min(r, max(c - glo, ghi - c)))
            enc.aux_vars.append(d)
            enc.constraints.append(
                model.add_constraint([(1, v), (-1, d)], Rel.LE, c, f"l1_up{k + 1}")
            )
            enc.constraints.append(
                model.add_constraint([(-1, v), (-1, d)], Rel.LE, -c, f"l1_dn{k + 1}")
            )
        enc.constraints.append(
            model.add_constraint([(1, d) for d in enc.aux_vars], Rel.LE, r, "l1_budget")
        )
        return enc
    if norm is Norm.L0:
        indicators = []
        for k, (v, c) in enumerate(zip(input_vars, u)):
            bound(v, glo, ghi)
            d = model.add_bool(f"d{k + 1}")
            indicators.append(d)
            enc.aux_vars.append(d)
            # 1 below the centre, 0 on it, 1 above; the top piece ends past the grid maximum
            pieces = [(glo, c, 1), (c, c + 1, 0), (c + 1, ghi + 1, 1)]
            pieces = [p for p in pieces if p[0] < p[1]]
            f = PiecewiseConstant(
                tuple(p[0] for p in pieces) + (pieces[-1][1],), tuple(p[2] for p in pieces)
            )
            pcf = encode_piecewise_constant(f, LinExpr.var(v), d, model, name=f"g{k + 1}")
            enc.aux_vars.extend(pcf.booleans)
            enc.constraints.extend(pcf.constraints)
        enc.constraints.append(
            model.add_constraint([(1, d) for d in indicators], Rel.LE, r, "l0_budget")
        )
        return enc
    raise ValueError(f"unsupported norm {norm}")


def _m_for(expr: LinExpr, model: IlpModel, big_m: int | None) -> int:
    return big_m if big_m is not None else _tight_m(expr, model)


def encode_output_difference(
    reference: Sequence[int], output_vars: Sequence[int], model: IlpModel, big_m: int | None = None
) -> list:
    """Rows satisfiable iff some output differs from ``reference``.

    Per output ``i`` two indicators mean "above" and "below" the reference;
    at least one of them must be set.
    """
    if len(reference) != len(output_vars):
        raise ValueError(f"reference has {len(reference)} entries, network {len(output_vars)} outputs")
    rows, indicators = [], []
    for i, (y, v) in enumerate(zip(reference, output_vars)):
        out = LinExpr.var(v)
        diff = out - y
        m = _m_for(diff, model, big_m)
        up = model.add_bool(f"vd{i + 1}_0")
        dn = model.add_bool(f"vd{i + 1}_1")
        indicators += [up, dn]
        # up = 1  <=>  out >= y + 1
        rows.append(model.add_relation(out, Rel.GE, y + 1 + m * (LinExpr.var(up) - 1), f"th{i + 1}_0a"))
        rows.append(model.add_relation(out, Rel.LT, y + 1 + m * LinExpr.var(up), f"th{i + 1}_0b"))
        # dn = 1  <=>  y >= out + 1
        rows.append(model.add_relation(LinExpr(const=y), Rel.GE, out + 1 + m * (LinExpr.var(dn) - 1), f"th{i + 1}_1a"))
        rows.append(model.add_relation(LinExpr(const=y), Rel.LT, out + 1 + m * LinExpr.var(dn), f"th{i + 1}_1b"))
    rows.append(model.add_constraint([(1, v) for v in indicators], Rel.GE, 1, "th_any"))
    return rows


def encode_misclassification(
    target: int, arity: int, output_vars: Sequence[int], model: IlpModel, big_m: int | None = None
) -> list:
    """Rows satisfiable iff first-argmax of the outputs is not ``target`` (1-based).

    Outputs before the target win ties, outputs after it must be strictly larger.
    """
    if not 1 <= target <= arity:
        raise ValueError(f"class {target} outside 1..{arity}")
    if len(output_vars) != arity:
        raise ValueError(f"arity {arity} but {len(output_vars)} output variables")
    g = LinExpr.var(output_vars[target - 1])
    rows, indicators = [], []
    for i in range(1, arity + 1):
        if i == target:
            continue
        out = LinExpr.var(output_vars[i - 1])
        m = _m_for(out - g, model, big_m)
        v = model.add_bool(f"vc{i}_{target}")
        indicators.append(v)
        step = 0 if i < target else 1
        rows.append(model.add_relation(out, Rel.GE, g + step + m * (LinExpr.var(v) - 1), f"thc{i}_a"))
        rows.append(model.add_relation(out, Rel.LT, g + step + m * LinExpr.var(v), f"thc{i}_b"))
    rows.append(model.add_constraint([(1, v) for v in indicators], Rel.GE, 1, "thc_any"))
    return rows


@dataclass
class Encoding:
    model: IlpModel
    input_vars: list
    output_vars: list
    neuron_terms: dict
    staircases: dict
    bounds: IntervalBounds | None
    booleans: int
    product_terms: int
    network_constraints: int
    network_variables: int

    @property
    def total_booleans(self) -> int:
        return self.model.count(Kind.BOOL)


def size_limits(qnn: QuantizedNetwork) -> tuple:
    """(max network rows, max network variables) permitted for ``qnn``."""
    neurons = sum(qnn.arch)
    non_input = neurons - qnn.n_inputs
    span = max(hi - lo for lo, hi in (qnn.out_range(i) for i in range(2, qnn.depth + 1)))
    return 4 * non_input, (span + 2) * neurons


def booleans_without_ia(qnn: QuantizedNetwork) -> int:
    """Staircase booleans of the full (untruncated) encoding: one per output grid value."""
    return sum(
        n * (qnn.out_range(i)[1] - qnn.out_range(i)[0] + 1)
        for i, n in zip(range(2, qnn.depth + 1), qnn.arch[1:])
    )


def build_network_model(
    qnn: QuantizedNetwork, region: InputRegionSpec, use_ia: bool = True
) -> tuple:
    """Input region plus network rows, no property; returns ``(model, inputs, bounds, net)``."""
    if len(region.center) != qnn.n_inputs:
        raise ValueError(f"centre has {len(region.center)} entries, network {qnn.n_inputs} inputs")
    region.check_grid(qnn.cfg_in)
    model = IlpModel(big_M=default_big_m(qnn))
    inputs = [
        model.add_var(f"x{j + 1}", qnn.cfg_in.lb(), qnn.cfg_in.ub()) for j in range(qnn.n_inputs)
    ]
    encode_input_region(region, qnn.cfg_in, model, inputs)
    bounds = region_bounds(qnn, region) if use_ia else None
    net = encode_network(qnn, bounds, model, inputs)
    max_rows, max_vars = size_limits(qnn)
    if len(net.constraints) > max_rows or net.variables > max_vars:
        raise AssertionError(
            f"network encoding too large: {len(net.constraints)} rows (limit {max_rows}), "
            f"{net.variables} variables (limit {max_vars})"
        )
    return model, inputs, bounds, net


def _encoding(model, inputs, bounds, net) -> Encoding:
    return Encoding(
        model=normalize(model),
        input_vars=inputs,
        output_vars=net.output_vars,
        neuron_terms=net.neuron_terms,
        staircases=net.staircases,
        bounds=bounds,
        booleans=net.booleans,
        product_terms=net.product_terms,
        network_constraints=len(net.constraints),
        network_variables=net.variables,
    )


def build_forward_model(qnn: QuantizedNetwork, x: Sequence[int], use_ia: bool = True) -> Encoding:
    """The network encoding with the input pinned to ``x`` (a radius-0 region)."""
    region = InputRegionSpec(tuple(x), 0, Norm.LINF)
    return _encoding(*build_network_model(qnn, region, use_ia))


def build_verification_model(
    qnn: QuantizedNetwork,
    region: InputRegionSpec,
    prop: PropertySpec,
    use_ia: bool = True,
) -> Encoding:
    if prop.arity != qnn.n_outputs:
        raise ValueError(f"property arity {prop.arity} != {qnn.n_outputs} network outputs")
    model, inputs, bounds, net = build_network_model(qnn, region, use_ia)
    m = None if use_ia else model.big_M
    if prop.kind is PropertyKind.OUTPUT:
        encode_output_difference(prop.reference, net.output_vars, model, m)
    else:
        encode_misclassification(prop.target, prop.arity, net.output_vars, model, m)
    return _encoding(model, inputs, bounds, net)
