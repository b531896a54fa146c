import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import forward_consistent, pcf_failures, random_pcf, size_ok, small_qnn
from qnnilp.encoder import (
    PiecewiseConstant,
    booleans_without_ia,
    build_forward_model,
    build_verification_model,
    encode_misclassification,
    encode_output_difference,
    encode_piecewise_constant,
    neuron_pcf,
    staircase,
)
from qnnilp.ilp import IlpModel, Kind, LinExpr, normalize
from qnnilp.interval import region_bounds
from qnnilp.region import InputRegionSpec, PropertySpec
from qnnilp.solver import solve
from qnnilp.synth import random_input

INF = float("inf")
HALF = Fraction(1, 2)


def test_pcf_validation():
    with pytest.raises(ValueError):
        PiecewiseConstant((0,), ())
    with pytest.raises(ValueError):
        PiecewiseConstant((0, 0), (1,))
    with pytest.raises(ValueError):
        PiecewiseConstant((0, INF, 5), (1, 2))
    f = PiecewiseConstant((-INF, HALF, INF), (1, 0))
    assert f(0) == 1 and f(HALF) == 0 and f.k == 2


def test_single_step_function_pins_first_piece():
    f = PiecewiseConstant((-INF, HALF, INF), (1, 0))
    m = IlpModel()
    x, y = m.add_var("x", 0, 0), m.add_var("y", 0, 1)
    enc = encode_piecewise_constant(f, LinExpr.var(x), y, m)
    assert len(enc.constraints) == 4 and len(enc.booleans) == 2
    res = solve(normalize(m))
    assert res.assignment[y] == 1 and res.assignment[enc.booleans[0]] == 1


@given(st.integers(0, 10**9))
def test_staircase_matches_function_everywhere(seed):
    assert pcf_failures(random_pcf(random.Random(seed))) == []


def test_staircase_is_clamp_round():
    f = staircase(0, 8)
    assert f.k == 9 and f.values == tuple(range(9))
    assert f(Fraction(-66, 16)) == 0 and f(Fraction(126, 16)) == 8 and f(Fraction(50, 16)) == 3
    with pytest.raises(ValueError):
        staircase(3, 2)


def test_neuron_pcf_sizes(qnn):
    assert neuron_pcf(qnn, 2, 0).k == 64
    bounds = region_bounds(qnn, InputRegionSpec((10, 2), 4, "inf"))
    assert neuron_pcf(qnn, 2, 0, bounds).k == 9
    with pytest.raises(IndexError):
        neuron_pcf(qnn, 1, 0)


def _running_model(qnn, use_ia):
    spec = InputRegionSpec((10, 2), 4, "inf")
    return build_verification_model(qnn, spec, PropertySpec.misclassification(2, 2), use_ia)


def test_running_example_staircases(qnn):
    with_ia = _running_model(qnn, True)
    without = _running_model(qnn, False)
    assert len(with_ia.staircases[(2, 0)]) == 9
    assert all(len(v) == 64 for v in without.staircases.values())
    assert set(without.staircases) == {(2, 0), (2, 1), (3, 0), (3, 1)}
    assert with_ia.booleans < without.booleans == 256 == booleans_without_ia(qnn)
    assert size_ok(qnn, with_ia) and size_ok(qnn, without)


def test_running_example_is_not_robust_at_radius_4(qnn):
    assert solve(_running_model(qnn, True).model).feasible
    assert solve(_running_model(qnn, False).model).feasible


def test_collapsed_neuron_becomes_constant(qnn):
    enc = build_forward_model(qnn, (10, 2), use_ia=True)
    assert enc.booleans == 0 and enc.staircases == {}
    assert [enc.model.variables[v].lower for v in enc.output_vars] == [8, 10]


def _pinned_outputs(values):
    m = IlpModel()
    outs = [m.add_var(f"o{k}", v, v) for k, v in enumerate(values)]
    return m, outs


@pytest.mark.parametrize("out, feasible", [((5,), False), ((7,), True), ((3,), True)])
def test_output_difference(out, feasible):
    m, outs = _pinned_outputs(out)
    encode_output_difference((5,), outs, m)
    assert solve(normalize(m)).feasible is feasible


@pytest.mark.parametrize(
    "target, out, feasible",
    [(1, (3, 3), False), (2, (3, 3), True), (1, (3, 4), True), (2, (4, 3), True), (2, (2, 3), False)],
)
def test_misclassification_ties(target, out, feasible):
    m, outs = _pinned_outputs(out)
    encode_misclassification(target, 2, outs, m)
    assert solve(normalize(m)).feasible is feasible


def test_misclassification_running_example_rows(qnn):
    m, outs = _pinned_outputs((8, 10))
    rows = encode_misclassification(2, 2, outs, m)
    assert len(rows) == 3
    assert sum(1 for v in m.variables if v.kind is Kind.BOOL) == 1


def test_property_argument_checks():
    m, outs = _pinned_outputs((1, 2))
    with pytest.raises(ValueError):
        encode_misclassification(3, 2, outs, m)
    with pytest.raises(ValueError):
        encode_output_difference((1,), outs, m)


def test_forward_consistency_sample():
    rng = random.Random(17)
    for _ in range(25):
        net = small_qnn(rng)
        for _ in range(4):
            x = random_input(rng, net)
            assert forward_consistent(net, x, True)
            assert forward_consistent(net, x, False)


def test_ia_never_adds_booleans():
    rng = random.Random(21)
    for _ in range(100):
        net = small_qnn(rng)
        u = random_input(rng, net)
        spec = InputRegionSpec(u, rng.randint(1, 3), rng.choice("012") if rng.random() < 0.7 else "inf")
        prop = PropertySpec.output_difference(tuple(0 for _ in range(net.n_outputs)))
        a = build_verification_model(net, spec, prop, True)
        b = build_verification_model(net, spec, prop, False)
        assert a.booleans <= b.booleans
        assert size_ok(net, a) and size_ok(net, b)
