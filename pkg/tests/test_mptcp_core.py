import math
from dataclasses import replace

import pytest
from hypothesis import assume, given, strategies as st

from acmptc.errors import AllocationError, DomainError
from acmptc.mptcp_core import (SubflowParams, allocate_load, baseline_mptcp_schedule,
                               baseline_tcp_schedule, equilibrium_window, path_subflow,
                               subflow_throughput, tcp_pick_path, total_throughput)
from acmptc.net_model import NetworkState, PathState


def sf(w, rtt, p):
    return SubflowParams(w, rtt, p)


def network(bws, lat=10.0, loss=0.0):
    return NetworkState(0, tuple(PathState(i, b, lat, 2 * lat, loss, 0.0, 100.0)
                                 for i, b in enumerate(bws)))


@pytest.mark.parametrize("w,rtt,p,expected", [(10, 0.1, 0.02, 99.0), (5, 0.05, 0.0, 100.0),
                                              (20, 0.2, 0.1, 95.0)])
def test_subflow_throughput(w, rtt, p, expected):
    assert subflow_throughput(sf(w, rtt, p)) == pytest.approx(expected, abs=1e-12)


def test_zero_rtt_is_domain_error():
    with pytest.raises(DomainError):
        sf(1.0, 0.0, 0.0)


def test_total_throughput():
    a, b = sf(10, 0.1, 0.02), sf(20, 0.2, 0.1)
    assert total_throughput([]) == 0
    assert total_throughput([a, b]) == pytest.approx(194.0, abs=1e-12)
    assert total_throughput([a]) == subflow_throughput(a)


@given(st.floats(0.1, 100), st.floats(0.001, 2), st.floats(1e-6, 0.99), st.floats(1.01, 3))
def test_throughput_monotone(w, rtt, p, k):
    base = subflow_throughput(sf(w, rtt, p))
    assert subflow_throughput(sf(w * k, rtt, p)) > base
    assert subflow_throughput(sf(w, rtt * k, p)) < base
    assume(p * k < 0.999)
    assert subflow_throughput(sf(w, rtt, p * k)) < base


def test_equilibrium_window_values():
    assert equilibrium_window(0.5) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert equilibrium_window(0.5, exact=False) == pytest.approx(2.0, abs=1e-12)
    assert equilibrium_window(2 / 3) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_equilibrium_window_domain(p):
    with pytest.raises(DomainError):
        equilibrium_window(p)


@given(st.floats(1e-6, 0.01))
def test_exact_and_approx_windows_converge(p):
    ex, ap = equilibrium_window(p), equilibrium_window(p, exact=False)
    assert abs(ex - ap) / ap < 0.05


class TestAllocate:
    def test_proportional(self):
        # throughputs 99 and 95
        res = allocate_load(100.0, [sf(10, 0.1, 0.02), sf(20, 0.2, 0.1)])
        assert res.shares[0] == pytest.approx(100 * 99 / 194, abs=1e-12)
        assert res.shares[1] == pytest.approx(100 * 95 / 194, abs=1e-12)
        assert res.shares[0] == pytest.approx(51.0309278, abs=1e-6)

    def test_zero_total(self):
        assert allocate_load(0.0, [sf(1, 1, 0), sf(2, 1, 0)]).shares == (0.0, 0.0)

    def test_single(self):
        assert allocate_load(42.0, [sf(1, 1, 0)]).shares == (42.0,)

    def test_errors(self):
        with pytest.raises(AllocationError):
            allocate_load(1.0, [])
        with pytest.raises(DomainError):
            allocate_load(-1.0, [sf(1, 1, 0)])

    @given(st.floats(0, 1e4), st.lists(st.tuples(st.floats(0.1, 50), st.floats(0.01, 1),
                                                 st.floats(0, 0.5)), min_size=1, max_size=8))
    def test_sum_and_order(self, total, specs):
        subs = [sf(*s) for s in specs]
        res = allocate_load(total, subs)
        assert math.fsum(res.shares) == pytest.approx(total, rel=1e-12, abs=1e-9)
        assert all(x >= 0 for x in res.shares)
        tp = [subflow_throughput(s) for s in subs]
        for i in range(len(subs)):
            for j in range(len(subs)):
                if tp[i] > tp[j] * (1 + 1e-9):
                    assert res.shares[i] >= res.shares[j] - 1e-9 * max(total, 1)


class TestBaselines:
    def test_tcp_single_path(self):
        assert tcp_pick_path(network([30.0])) == 0

    def test_tcp_argmax(self):
        assert tcp_pick_path(network([10.0, 80.0, 40.0])) == 1

    def test_tcp_tie(self):
        assert tcp_pick_path(network([50.0, 50.0, 20.0])) == 0

    def test_tcp_stays_pinned(self):
        n0 = network([10.0, 80.0, 40.0])
        out = baseline_tcp_schedule([5.0], n0)
        assert out[0][1] > 0 and out[0][0] == 0 == out[0][2]
        n1 = network([90.0, 10.0, 40.0])
        again = baseline_tcp_schedule([5.0], n1, pinned=[1])
        assert again[0][1] > 0 and again[0][0] == 0

    def test_mptcp_symmetric_split(self):
        out = baseline_mptcp_schedule([30.0], network([50.0] * 3, loss=0.01))
        assert out[0] == pytest.approx([10.0, 10.0, 10.0])

    def test_mptcp_zero_demand(self):
        assert baseline_mptcp_schedule([0.0], network([50.0, 20.0])) == [[0.0, 0.0]]

    def test_mptcp_uses_floor_window_on_lossless_path(self):
        n = network([50.0])
        assert path_subflow(n, 0).window == 1.0

    def test_vanishing_loss_stays_finite(self):
        n = NetworkState(0, (PathState(0, 10.0, 20.0, 40.0, 2.2e-313, 0.0, 100.0),
                             PathState(1, 10.0, 20.0, 40.0, 0.0, 0.0, 100.0)))
        assert baseline_mptcp_schedule([10.0], n) == [[5.0, 5.0]]

    def test_mptcp_matches_allocation_oracle(self):
        n = NetworkState(0, (PathState(0, 50.0, 10.0, 20.0, 0.02, 0.0, 100.0),
                             PathState(1, 50.0, 30.0, 60.0, 0.005, 0.0, 100.0)))
        subs = [path_subflow(n, i) for i in range(2)]
        tp = [subflow_throughput(s) for s in subs]
        out = baseline_mptcp_schedule([100.0], n)[0]
        assert out[0] == pytest.approx(100 * tp[0] / sum(tp), abs=1e-12)

    @given(st.lists(st.floats(0, 60), min_size=1, max_size=4),
           st.lists(st.tuples(st.floats(10, 100), st.floats(0, 0.05)), min_size=1, max_size=5))
    def test_never_exceed_demand(self, demands, paths):
        n = NetworkState(0, tuple(PathState(i, b, 20.0, 40.0, p, 0.0, 100.0)
                                  for i, (b, p) in enumerate(paths)))
        for rows in (baseline_tcp_schedule(demands, n), baseline_mptcp_schedule(demands, n)):
            for d, row in zip(demands, rows):
                assert math.fsum(row) <= d * (1 + 1e-12) + 1e-12
