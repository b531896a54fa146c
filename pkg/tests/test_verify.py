import math
import random
import time

import pytest

from oracles import random_instance
from qnnilp.encoder import booleans_without_ia
from qnnilp.quant import QuantConfig, QuantizedNetwork, load_qnn
from qnnilp.region import InputRegionSpec, Norm, max_radius
from qnnilp.verify import (
    RegionTooLarge,
    VerdictStatus,
    brute_force_verify,
    compute_mrr,
    validate_counterexample,
    verify_robustness,
)

U8 = QuantConfig(False, 8, 0)
S8 = QuantConfig(True, 8, 0)
ROBUST, NON_ROBUST, TIMEOUT = VerdictStatus.ROBUST, VerdictStatus.NON_ROBUST, VerdictStatus.TIMEOUT


def _constant_net():
    # one input on a 0..255 grid, two outputs fixed at 3 and 1
    return QuantizedNetwork((1, 2), (((0,), (0,)),), ((3, 1),), U8, S8, S8, U8, U8)


def test_radius_zero_is_robust(qnn):
    for norm in Norm:
        assert verify_robustness(qnn, (10, 2), 0, norm).robust
        assert brute_force_verify(qnn, (10, 2), 0, norm).robust


def test_running_example_verdicts(qnn):
    v = verify_robustness(qnn, (10, 2), 4, "inf", "class")
    assert v.status is NON_ROBUST
    assert validate_counterexample(qnn, (10, 2), v.counterexample, 4, "inf", "class")
    assert verify_robustness(qnn, (10, 2), 4, "inf", "class", use_ia=False).status is NON_ROBUST
    assert 0 < v.stats.booleans < booleans_without_ia(qnn)


def test_brute_force_counts_box_points(qnn):
    res = brute_force_verify(_constant_net(), (100,), 1, "inf")
    assert res.robust and res.stats.evaluations == 3
    net = QuantizedNetwork((2, 2), (((0, 0), (0, 0)),), ((3, 1),), U8, S8, S8, U8, U8)
    assert brute_force_verify(net, (100, 100), 1, "inf").stats.evaluations == 9


def test_brute_force_cap(qnn):
    with pytest.raises(RegionTooLarge):
        brute_force_verify(qnn, (10, 2), 3, "0", cap=100)


def test_validate_counterexample(qnn):
    assert not validate_counterexample(qnn, (10, 2), (10, 2), 4, "inf")
    assert not validate_counterexample(qnn, (10, 2), (64, 2), 64, "inf")
    assert not validate_counterexample(qnn, (10, 2), (20, 2), 4, "inf")
    assert not validate_counterexample(qnn, (10, 2), (10,), 4, "inf")


def test_bad_centre_rejected(qnn):
    with pytest.raises(ValueError):
        verify_robustness(qnn, (10, 2, 1), 1)
    with pytest.raises(ValueError):
        verify_robustness(qnn, (10, 99), 1)


def test_expired_deadline(qnn):
    v = verify_robustness(qnn, (10, 2), 4, deadline=time.monotonic() - 1)
    assert v.status is TIMEOUT


def test_verify_matches_brute_force():
    rng = random.Random(31)
    for _ in range(60):
        qnn, u, r, norm, kind = random_instance(rng)
        oracle = brute_force_verify(qnn, u, r, norm, kind)
        for ia in (True, False):
            v = verify_robustness(qnn, u, r, norm, kind, use_ia=ia)
            assert v.status is oracle.status
            if v.counterexample is not None:
                assert validate_counterexample(qnn, u, v.counterexample, r, norm, kind)


def test_mrr_zero_when_radius_one_fails(qnn):
    res = compute_mrr(qnn, (10, 2), "inf")
    assert res.radius == 0 and res.probes == [(1, NON_ROBUST)]


def test_mrr_constant_network_saturates():
    net = _constant_net()
    res = compute_mrr(net, (100,), "inf")
    assert res.saturated and res.radius == max_radius((100,), Norm.LINF, U8) == 155


def test_mrr_known_fixture(data_dir):
    net = load_qnn(data_dir / "mrr5.json")
    res = compute_mrr(net, (2,), "inf", 10, 10)
    assert res.radius == 5 and not res.saturated
    assert brute_force_verify(net, (2,), 5).robust
    assert not brute_force_verify(net, (2,), 6).robust


def _stub(mrr):
    return lambda r: ROBUST if r <= mrr else NON_ROBUST


@pytest.mark.parametrize("step", [1, 3, 10, 32])
def test_mrr_probe_count_on_monotone_stub(step):
    net = _constant_net()
    for mrr in range(0, 150):
        res = compute_mrr(net, (0,), "inf", start_r=10, step=step, verifier=_stub(mrr))
        assert res.radius == mrr
        bound = math.ceil(mrr / step) + 2 * math.log2(step + 1) + math.log2(mrr + 2) + 4
        assert len(res.probes) <= bound
        assert len({r for r, _ in res.probes}) == len(res.probes)


def test_mrr_probes_stay_under_cap():
    net = _constant_net()
    res = compute_mrr(net, (250,), "inf", 10, 10, verifier=_stub(10**6))
    assert res.saturated and res.radius == 250
    assert max(r for r, _ in res.probes) == 250


def test_mrr_timeout_keeps_probe_log():
    net = _constant_net()

    def verifier(r):
        return ROBUST if r < 20 else TIMEOUT

    res = compute_mrr(net, (0,), "inf", 10, 10, verifier=verifier)
    assert res.timed_out and res.radius is None
    assert res.probes[-1] == (20, TIMEOUT)


def test_mrr_argument_checks():
    with pytest.raises(ValueError):
        compute_mrr(_constant_net(), (0,), "inf", start_r=0)
