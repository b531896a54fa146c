import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qnnilp.encoder import encode_input_region
from qnnilp.ilp import IlpModel, normalize
from qnnilp.quant import QuantConfig
from qnnilp.region import InputRegionSpec, Norm, PropertyKind, PropertySpec, max_radius
from qnnilp.solver import solve

U64 = QuantConfig(False, 6, 4)
SMALL = QuantConfig(False, 3, 2)  # grid 0..7
SIGNED = QuantConfig(True, 3, 1)  # grid -4..3


def test_norm_parse():
    assert Norm.parse("inf") is Norm.LINF and Norm.parse(2) is Norm.L2
    with pytest.raises(ValueError):
        Norm.parse("3")


def test_linf_box_running_example():
    spec = InputRegionSpec((10, 2), 4, "inf")
    assert spec.box(U64) == [(6, 14), (0, 6)]
    assert spec.size_of_box(U64) == 9 * 7


def test_l0_box_is_whole_grid():
    assert InputRegionSpec((3, 5), 1, "0").box(SMALL) == [(0, 7), (0, 7)]
    assert InputRegionSpec((3, 5), 0, "0").box(SMALL) == [(3, 3), (5, 5)]


def test_region_membership_per_norm():
    c = (3, 3)
    assert InputRegionSpec(c, 1, "0").within_distance((3, 7))
    assert not InputRegionSpec(c, 1, "0").within_distance((4, 7))
    assert InputRegionSpec(c, 2, "1").within_distance((4, 4))
    assert not InputRegionSpec(c, 2, "1").within_distance((5, 4))
    assert InputRegionSpec(c, 2, "2").within_distance((5, 3))
    assert not InputRegionSpec(c, 2, "2").within_distance((5, 4))
    assert InputRegionSpec(c, 2, "inf").within_distance((5, 1))


def test_l1_radius_one_neighbourhood():
    spec = InputRegionSpec((3, 0), 1, "1")
    assert set(spec.points(SMALL)) == {(3, 0), (2, 0), (4, 0), (3, 1)}


def test_negative_radius_rejected():
    with pytest.raises(ValueError):
        InputRegionSpec((1,), -1, "inf")


def test_check_grid():
    with pytest.raises(ValueError):
        InputRegionSpec((8,), 1, "inf").check_grid(SMALL)


def test_max_radius_covers_grid():
    rng = random.Random(0)
    for _ in range(200):
        cfg = rng.choice((SMALL, SIGNED))
        c = tuple(rng.randint(cfg.lb(), cfg.ub()) for _ in range(rng.randint(1, 3)))
        norm = rng.choice(list(Norm))
        r = max_radius(c, norm, cfg)
        full = set(itertools.product(range(cfg.lb(), cfg.ub() + 1), repeat=len(c)))
        assert set(InputRegionSpec(c, r, norm).points(cfg)) == full
        if r > 0:
            assert set(InputRegionSpec(c, r - 1, norm).points(cfg)) != full


def _feasible_inputs(spec, cfg):
    # every grid point the encoded region admits, found by pinning each candidate
    found = set()
    for x in itertools.product(range(cfg.lb(), cfg.ub() + 1), repeat=len(spec.center)):
        m = IlpModel()
        vs = [m.add_var(f"x{k}", cfg.lb(), cfg.ub()) for k in range(len(x))]
        encode_input_region(spec, cfg, m, vs)
        if not all(m.variables[v].lower <= val <= m.variables[v].upper for v, val in zip(vs, x)):
            continue
        for v, val in zip(vs, x):
            m.set_bounds(v, val, val)
        if solve(normalize(m)).feasible:
            found.add(x)
    return found


@given(
    st.sampled_from([SMALL, SIGNED]),
    st.integers(1, 2),
    st.sampled_from(list(Norm)),
    st.integers(0, 4),
    st.data(),
)
def test_region_encoding_is_exact(cfg, n, norm, r, data):
    c = tuple(data.draw(st.integers(cfg.lb(), cfg.ub())) for _ in range(n))
    spec = InputRegionSpec(c, r, norm)
    expected = {
        x
        for x in itertools.product(range(cfg.lb(), cfg.ub() + 1), repeat=n)
        if spec.within_distance(x)
    }
    assert set(spec.points(cfg)) == expected
    assert _feasible_inputs(spec, cfg) == expected


def test_property_specs():
    p = PropertySpec.for_output("class", [8, 10])
    assert p.kind is PropertyKind.CLASS and p.target == 2 and p.arity == 2
    assert p.violated_by([10, 10]) and not p.violated_by([9, 11])
    q = PropertySpec.for_output("output", [8, 10])
    assert q.violated_by([8, 11]) and not q.violated_by([8, 10])
    with pytest.raises(ValueError):
        PropertySpec.misclassification(3, 2)
    with pytest.raises(ValueError):
        q.violated_by([1])
