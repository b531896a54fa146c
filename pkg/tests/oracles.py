"""Independent checks shared by the unit tests and the acceptance suite."""

import random
from fractions import Fraction

from qnnilp.encoder import PiecewiseConstant, build_forward_model, encode_piecewise_constant, size_limits
from qnnilp.ilp import IlpModel, LinExpr, normalize
from qnnilp.quant import qnn_forward
from qnnilp.region import Norm
from qnnilp.solver import Status, solve
from qnnilp.synth import random_input, random_qnn

INF = float("inf")


def random_pcf(rng: random.Random, k_max: int = 6, lo: int = -20, hi: int = 20) -> PiecewiseConstant:
    k = rng.randint(1, k_max)
    points = sorted(rng.sample(range(lo, hi + 1), k + 1))
    breakpoints = [Fraction(p) for p in points]
    if rng.random() < 0.5:
        breakpoints[0] = -INF
    if rng.random() < 0.5:
        breakpoints[-1] = INF
    values = tuple(rng.randint(-10, 10) for _ in range(k))
    return PiecewiseConstant(tuple(breakpoints), values)


def pcf_domain(f: PiecewiseConstant, pad: int = 5) -> range:
    a = f.breakpoints
    finite = [int(p) for p in a if p not in (INF, -INF)] or [0]
    lo = int(a[0]) if a[0] != -INF else finite[0] - pad
    hi = int(a[-1]) - 1 if a[-1] != INF else finite[-1] + pad
    return range(lo, hi + 1)


def expected_pcf(f: PiecewiseConstant, x: int) -> int:
    # scan the pieces directly rather than calling f
    for left, right, t in zip(f.breakpoints, f.breakpoints[1:], f.values):
        if left <= x < right:
            return t
    raise ValueError(x)


def pcf_failures(f: PiecewiseConstant) -> list:
    """Integers x where the encoding does not pin y to f(x) exactly."""
    dom = pcf_domain(f)
    failures = []
    for x in dom:
        want = expected_pcf(f, x)
        model = IlpModel()
        xv = model.add_var("x", dom.start, dom.stop - 1)
        yv = model.add_var("y", min(f.values) - 2, max(f.values) + 2)
        encode_piecewise_constant(f, LinExpr.var(xv), yv, model)
        model.set_bounds(xv, x, x)
        model = normalize(model)
        res = solve(model)
        if not res.feasible or res.assignment[yv] != want:
            failures.append(x)
            continue
        lo, hi = model.variables[yv].lower, model.variables[yv].upper
        for a, b in ((lo, want - 1), (want + 1, hi)):
            if a <= b:
                other = model.copy()
                other.set_bounds(yv, a, b)
                if solve(other).status is not Status.INFEASIBLE:
                    failures.append(x)
    return failures


def forward_consistent(qnn, x, use_ia: bool) -> bool:
    """Pinning the inputs forces the encoded outputs to equal qnn_forward, uniquely."""
    want = qnn_forward(qnn, list(x))
    enc = build_forward_model(qnn, x, use_ia)
    res = solve(enc.model)
    if not res.feasible or [res.assignment[v] for v in enc.output_vars] != want:
        return False
    for v, y in zip(enc.output_vars, want):
        lo, hi = enc.model.variables[v].lower, enc.model.variables[v].upper
        for a, b in ((lo, y - 1), (y + 1, hi)):
            if a <= b:
                other = enc.model.copy()
                other.set_bounds(v, a, b)
                if solve(other).status is not Status.INFEASIBLE:
                    return False
    return size_ok(qnn, enc)


def size_ok(qnn, enc) -> bool:
    max_rows, max_vars = size_limits(qnn)
    return enc.network_constraints <= max_rows and enc.network_variables <= max_vars


def small_qnn(rng: random.Random):
    """At most 3 inputs, one hidden layer of at most 4 neurons, Q in {3, 4}."""
    return random_qnn(rng, n_inputs=rng.randint(1, 3), hidden=(rng.randint(1, 4),))


def random_instance(rng: random.Random, max_r: int = 3):
    qnn = small_qnn(rng)
    return (
        qnn,
        random_input(rng, qnn),
        rng.randint(1, max_r),
        rng.choice(list(Norm)).value,
        rng.choice(("class", "output")),
    )
