import io
import math
from dataclasses import replace

import numpy as np
import pytest

from acmptc.control import StreamSpec
from acmptc.errors import ConfigError
from acmptc.net_model import DynamicsConfig, TraceRecord, synthetic_trace, write_trace
from acmptc.sim import (SCHEDULERS, MetricsRecord, ScenarioConfig, Simulator, make_scenario,
                        p95_nearest_rank, run_comparison, run_episode, sign_test_pvalue,
                        summarize, train_agents)


def fixed(n_paths=1, bw=40.0, lat=10.0, loss=0.0, streams=(10.0,), horizon=20):
    dyn = DynamicsConfig(n_paths=n_paths, bandwidth_range=(bw, bw), latency_range=(lat, lat),
                         loss_range=(loss, loss), walk_step_fraction=0.0,
                         background_traffic_range=(0.0, 0.0))
    specs = tuple(StreamSpec(i, r) for i, r in enumerate(streams))
    return ScenarioConfig(dynamics=dyn, streams=specs, horizon=horizon, scenario_kind="steady")


@pytest.fixture(scope="module")
def tiny_agents():
    cfg = replace(ScenarioConfig(horizon=10), agent=replace(ScenarioConfig().agent, episodes=1))
    return cfg, train_agents(cfg, 99, horizon=10).agents


class TestEpisode:
    def test_single_record(self):
        res = run_episode(fixed(horizon=1), 0)
        assert len(res.records) == 1

    @pytest.mark.parametrize("sched", ["tcp", "mptcp", "acmptc"])
    def test_uncontended_delivers_demand(self, sched):
        res = run_episode(fixed(), 0, scheduler=sched)
        for r in res.records:
            assert r.delivered_mbps == pytest.approx(10.0, rel=1e-12)

    @pytest.mark.parametrize("sched", ["tcp", "mptcp", "acmptc"])
    def test_oversubscribed_capped(self, sched):
        res = run_episode(fixed(bw=10.0, streams=(50.0,)), 0, scheduler=sched)
        assert all(r.delivered_mbps <= 10.0 + 1e-12 for r in res.records)

    def test_multipath_beats_single_path_when_each_path_is_short(self):
        cfg = fixed(n_paths=2, bw=40.0, streams=(60.0,), lat=5.0)
        tcp = run_episode(cfg, 0, scheduler="tcp").summary["mean_throughput_mbps"]
        mptcp = run_episode(cfg, 0, scheduler="mptcp").summary["mean_throughput_mbps"]
        assert tcp <= 40.0 + 1e-9
        assert mptcp > tcp

    @pytest.mark.parametrize("sched", SCHEDULERS)
    def test_record_count_and_time_order(self, sched, tiny_agents):
        cfg, agents = tiny_agents
        cfg = replace(cfg, horizon=30)
        res = run_episode(cfg, 4, scheduler=sched, agents=agents if sched == "acmptc_drl" else None)
        assert len(res.records) == 30 * len(cfg.streams)
        keys = [(r.t, r.stream_id) for r in res.records]
        assert keys == sorted(keys) and len(set(keys)) == len(keys)
        for r in res.records:
            assert r.delivered_mbps >= 0 and 0 <= r.loss_rate <= 1

    def test_drl_needs_agents(self):
        with pytest.raises(ConfigError):
            run_episode(ScenarioConfig(horizon=2), 0, scheduler="acmptc_drl")

    def test_invalid_config_fails_before_stepping(self):
        with pytest.raises(ConfigError):
            run_episode(replace(ScenarioConfig(), horizon=0), 0)

    def test_deterministic(self):
        cfg = replace(ScenarioConfig(), horizon=50)
        assert run_episode(cfg, 8).records == run_episode(cfg, 8).records

    def test_conservation_and_delivery_bounds(self):
        cfg = make_scenario("extreme", replace(ScenarioConfig(), horizon=200))
        sim = Simulator(cfg, 5)
        for _ in range(cfg.horizon):
            sim.step()
            for i, p in enumerate(sim.net.paths):
                used = math.fsum(s.alloc_mbps.get(i, 0.0) for s in sim.states)
                assert used <= p.capacity_mbps + 1e-9
            for s in sim.states:
                assert s.actual_rate_mbps <= math.fsum(s.alloc_mbps.values()) + 1e-9
                assert all(w >= 1.0 for w in s.cwnd_mbit.values())
                assert s.assigned_paths

    def test_trace_driven_network(self):
        dyn = DynamicsConfig(n_paths=2)
        recs = synthetic_trace(dyn, 6, seed=1)
        cfg = replace(ScenarioConfig(dynamics=dyn), horizon=5)
        sim = Simulator(cfg, 0, trace=recs)
        for t in range(5):
            want = [r for r in recs if r.t == t]
            assert [p.latency_ms for p in sim.net.paths] == [r.latency_ms for r in want]
            sim.step()

    def test_trace_file(self, tmp_path):
        dyn = DynamicsConfig(n_paths=2)
        recs = synthetic_trace(dyn, 4, seed=1)
        path = tmp_path / "trace.csv"
        with open(path, "w") as fh:
            write_trace(recs, fh)
        cfg = replace(ScenarioConfig(dynamics=dyn), horizon=3, trace_path=str(path))
        assert len(run_episode(cfg, 0).records) == 9

    def test_stream_trace_drives_demand(self, tmp_path):
        path = tmp_path / "streams.csv"
        path.write_text("t,stream_id,bitrate_mbps\n0,0,5\n2,0,30\n")
        cfg = replace(fixed(bw=100.0, horizon=4), stream_trace_path=str(path))
        sim = Simulator(cfg, 0)
        seen = []
        for _ in range(4):
            seen.append(sim.demands()[0])
            sim.step()
        assert seen == [5.0, 5.0, 30.0, 30.0]


class TestScenarios:
    def test_kinds(self):
        base = ScenarioConfig()
        steady, var, ext = (make_scenario(k, base) for k in ("steady", "variable", "extreme"))
        assert steady.dynamics.walk_step_fraction == 0.0
        assert var.dynamics.walk_step_fraction == 0.1
        assert ext.dynamics.walk_step_fraction == 0.3
        assert ext.dynamics.loss_range[1] == 0.05
        assert ext.dynamics.bandwidth_range[0] == pytest.approx(0.1 * base.dynamics.bandwidth_range[0])
        assert replace(var.dynamics, walk_step_fraction=0.0) == steady.dynamics
        assert replace(var, dynamics=steady.dynamics, scenario_kind="steady") == steady

    def test_steady_frozen(self):
        cfg = make_scenario("steady", replace(ScenarioConfig(), horizon=5))
        sim = Simulator(cfg, 2)
        bws = [p.bandwidth_mbps for p in sim.net.paths]
        for _ in range(5):
            sim.step()
            assert [p.bandwidth_mbps for p in sim.net.paths] == bws

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            make_scenario("stormy", ScenarioConfig())

    def test_rules_fire_on_extreme(self):
        cfg = make_scenario("extreme", replace(ScenarioConfig(), horizon=100))
        fired = [run_episode(cfg, s, scheduler="acmptc").reallocations > 0 for s in range(10)]
        assert sum(fired) >= 9


class TestSummaries:
    def rec(self, t, d=10.0, lat=20.0):
        return MetricsRecord(t, 0, d, lat, 0.0, 1.0, 0.5, (0,))

    def test_constant(self):
        s = summarize([self.rec(t) for t in range(100)])
        assert s["cumulative_throughput"] == 1000.0 and s["mean_throughput_mbps"] == 10.0

    def test_p95(self):
        assert p95_nearest_rank([float(x) for x in range(100, 0, -1)]) == 95.0
        s = summarize([self.rec(t, lat=float(t + 1)) for t in range(100)])
        assert s["p95_latency_ms"] == 95.0

    def test_single(self):
        s = summarize([self.rec(0, d=7.5, lat=33.0)])
        assert (s["mean_throughput_mbps"], s["p95_latency_ms"], s["min_throughput_mbps"]) == (7.5, 33.0, 7.5)
        assert s["per_stream"][0]["mean_throughput_mbps"] == 7.5

    def test_empty(self):
        with pytest.raises(ValueError):
            summarize([])

    def test_sign_test(self):
        assert sign_test_pvalue([1.0] * 20) == pytest.approx(0.5 ** 20)
        assert sign_test_pvalue([0.0, 0.0]) == 1.0
        assert sign_test_pvalue([1.0, -1.0]) == pytest.approx(0.75)


class TestComparison:
    def test_single_cell_equals_episode(self):
        cfg = replace(ScenarioConfig(), horizon=20)
        rep = run_comparison(cfg, ["acmptc"], [3])
        ep = run_episode(cfg, 3, scheduler="acmptc")
        for k, v in rep.means["acmptc"].items():
            want = ep.violations if k == "violations" else ep.summary[k]
            assert v == pytest.approx(want, rel=1e-15)

    def test_duplicate_scheduler_identical(self):
        cfg = replace(ScenarioConfig(), horizon=20)
        rep = run_comparison(cfg, ["mptcp", "mptcp"], [1, 2])
        assert all(all(d == 0 for d in v) for v in rep.paired_diffs["mptcp"].values())

    def test_paired_exogenous_draws(self, tiny_agents):
        cfg, agents = tiny_agents
        cfg = replace(cfg, horizon=25)
        rep = run_comparison(cfg, list(SCHEDULERS), [1, 2], agents=agents)
        assert rep.checksums_equal
        assert len({r.exogenous_checksum for r in rep.results["tcp"]}) == 2

    def test_requires_inputs(self):
        with pytest.raises(ConfigError):
            run_comparison(ScenarioConfig(), [], [1])
