"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import itertools
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from acmptc import control as ctl
from acmptc.cli import main as cli_main
from acmptc.control import ControlParams, StreamSpec, StreamState
from acmptc.drl import nets
from acmptc.drl.agent import Agent, AgentConfig, train
from acmptc.drl.gradcheck import run_gradcheck
from acmptc.drl.toy import DominantPathEnv
from acmptc.mptcp_core import SubflowParams, equilibrium_window, subflow_throughput
from acmptc.net_model import NetworkState, PathState
from acmptc.sim import (ScenarioConfig, Simulator, make_scenario, run_comparison,
                        sign_test_pvalue, train_agents)


@pytest.fixture
def report(capsys):
    def emit(n, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[criterion {n:>2}] {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip())
        assert ok, f"criterion {n} failed: {detail}"
    return emit


def net_of(rows):
    """rows of (bw, latency, loss, congestion, rtt)"""
    return NetworkState(0, tuple(PathState(i, *r[:2], r[4], r[2], r[3], 100.0)
                                 for i, r in enumerate(rows)))


def test_1_formula_exactness(report):
    start = time.perf_counter()
    p = ControlParams(cwnd_inc_alpha=1.0, cwnd_dec_beta=0.5, rho_th=0.05, rate_delta=2.0)
    checks = [
        (subflow_throughput(SubflowParams(10, 0.1, 0.02)), 99.0),
        (equilibrium_window(0.5, exact=True), math.sqrt(2.0)),
        (equilibrium_window(0.5, exact=False), 2.0),
        (ctl.update_cwnd(10, 0.01, 0.0, p), 10.99),
        (ctl.update_cwnd(10, 0.1, 0.0, p), 9.5),
        (ctl.update_cwnd(1, 1.0, 0.0, replace(p, cwnd_dec_beta=1.0)), 1.0),
        (ctl.adjust_cwnd_rate(10, 15, 10, p), 11.0),
        (ctl.adjust_cwnd_rate(7, 10, 10, p), 7.0),
        (ctl.adjust_cwnd_rate(1, 0, 10, p), 1.0),
    ]
    elapsed = time.perf_counter() - start
    worst = max(abs(got - want) for got, want in checks)
    report(1, "formula exactness", worst <= 1e-12 and elapsed < 1.0,
           f"max abs error {worst:.1e}, {elapsed * 1e3:.1f} ms")


def enumerate_best(scores, k):
    best, best_sum = None, -math.inf
    for r in range(1, min(k, len(scores)) + 1):
        for combo in itertools.combinations(range(len(scores)), r):
            s = math.fsum(scores[i] for i in combo)
            if s > best_sum or (s == best_sum and combo < best):
                best, best_sum = combo, s
    return best


def test_2_selection_oracle(report):
    rng = np.random.default_rng(2)
    p = ControlParams()
    start = time.perf_counter()
    agree = 0
    for _ in range(1000):
        rows = [(rng.uniform(1, 100), rng.uniform(10, 100), rng.uniform(0, 0.05),
                 rng.uniform(0, 1), rng.uniform(20, 300)) for _ in range(5)]
        network = net_of(rows)
        k = int(rng.integers(1, 6))
        scores = [p.sel_alpha * q.bandwidth_mbps - p.sel_beta * q.latency_ms - p.sel_gamma * q.loss_rate
                  for q in network.paths]
        agree += ctl.select_paths(StreamSpec(0, 10.0, max_paths=k), network, p) == enumerate_best(scores, k)
    elapsed = time.perf_counter() - start
    report(2, "path selection vs enumeration", agree == 1000 and elapsed < 10.0,
           f"{agree}/1000 agree, {elapsed:.2f} s")


def brute_reallocation(network, current, fired, key):
    if not fired:
        return current
    alts = [q for q in network.paths if q.path_id != current]
    if not alts:
        return current
    best = alts[0]
    for q in alts[1:]:
        if key(q) < key(best):
            best = q
    return best.path_id


def test_3_reallocation_oracle(report):
    rng = np.random.default_rng(3)
    grid = np.array([0.0, 0.02, 0.04])
    agree = total = 0
    for draw in range(10_000):
        n = int(rng.integers(1, 7))
        coarse = draw % 4 == 0  # coarse grids force ties
        rows = []
        for _ in range(n):
            if coarse:
                rows.append((50.0, float(rng.choice([20.0, 40.0, 120.0])), float(rng.choice(grid)),
                             float(rng.choice([0.4, 0.6, 0.9])), float(rng.choice([90.0, 150.0]))))
            else:
                rows.append((50.0, rng.uniform(1, 200), rng.uniform(0, 0.1), rng.uniform(0, 1),
                             rng.uniform(1, 300)))
        network = net_of(rows)
        p = ControlParams(C_th=float(rng.uniform(0, 1)), RTT_th_ms=float(rng.uniform(1, 300)),
                          L_th_ms=float(rng.uniform(1, 200)), rho_th=float(rng.uniform(0, 0.1)))
        cur = int(rng.integers(0, n))
        here = network.paths[cur]
        cases = [
            (ctl.reallocate_on_congestion, here.congestion > p.C_th, lambda q: q.congestion),
            (ctl.reallocate_on_delay, here.rtt_ms > p.RTT_th_ms or here.latency_ms > p.L_th_ms,
             lambda q: (q.rtt_ms, q.latency_ms)),
            (ctl.reallocate_on_loss, here.loss_rate > p.rho_th, lambda q: q.loss_rate),
        ]
        for rule, fired, key in cases:
            total += 1
            agree += rule(cur, network, p).path_id == brute_reallocation(network, cur, fired, key)
    report(3, "reallocation rules vs brute force", agree == total, f"{agree}/{total} agree")


def test_4_gradcheck(report):
    start = time.perf_counter()
    rep = run_gradcheck(n_nets=50, max_params=1000, seed=4)
    elapsed = time.perf_counter() - start
    report(4, "gradient check", rep.max_rel_error < 1e-4 and rep.max_params <= 1000 and elapsed < 30,
           f"max rel error {rep.max_rel_error:.2e} over {rep.n_nets} nets, {elapsed:.1f} s")


def test_5_policy_validity(report):
    rng = np.random.default_rng(5)
    worst_sum, min_p, bad = 0.0, 1.0, 0
    pool = [(int(rng.integers(1, 12)), tuple(int(h) for h in rng.integers(1, 16, rng.integers(0, 3))),
             int(rng.integers(2, 40))) for _ in range(50)]
    for i in range(100_000):
        d_in, hidden, d_out = pool[i % len(pool)]
        scale = float(10.0 ** rng.uniform(-3, 2.5))
        params = nets.init_mlp((d_in, *hidden, d_out), rng)
        params = params.with_flat(params.flat() * scale)
        obs = rng.normal(0.0, scale, d_in)
        probs = nets.policy(params, obs)
        worst_sum = max(worst_sum, abs(math.fsum(probs) - 1.0))
        min_p = min(min_p, float(probs.min()))
        bad += not np.all(np.isfinite(probs))
    report(5, "softmax policy validity", worst_sum <= 1e-9 and min_p >= 0.0 and bad == 0,
           f"max |sum-1| {worst_sum:.1e}, min prob {min_p:.1e}")


def test_6_conservation(report):
    cfg = ScenarioConfig()
    assert cfg.dynamics.n_paths == 5 and len(cfg.streams) == 3 and cfg.horizon == 1000
    sim = Simulator(cfg, 6, scheduler="acmptc")
    over = low_cwnd = 0
    for _ in range(cfg.horizon):
        sim.step()
        for i, path in enumerate(sim.net.paths):
            used = math.fsum(s.alloc_mbps.get(i, 0.0) for s in sim.states)
            over += used > path.capacity_mbps
        low_cwnd += sum(w < 1.0 for s in sim.states for w in s.cwnd_mbit.values())
    report(6, "capacity conservation and cwnd floor", over == 0 and low_cwnd == 0,
           f"{over} capacity overruns, {low_cwnd} cwnd values below 1 over {cfg.horizon} steps")


def test_7_toy_mdp(report):
    start = time.perf_counter()
    env = DominantPathEnv(horizon=20, seed=0)
    rng = np.random.default_rng(0)
    agents = [Agent.create(0, env.n_paths, rng)]
    res = train(env, agents, AgentConfig(episodes=500, epsilon_decay=0.98), rng)
    states = env.sample_states(1000, 7)
    frac = float(np.mean([agents[0].greedy(s).primary_path == env.dominant for s in states]))
    td = np.asarray(res.td_errors)
    smooth = np.array([td[max(0, k - 49):k + 1].mean() for k in range(len(td))])
    ratio = smooth[499] / smooth[99]
    elapsed = time.perf_counter() - start
    report(7, "toy MDP learning", frac >= 0.95 and ratio < 0.5 and elapsed < 120,
           f"dominant picks {frac:.1%}, smoothed TD 500/100 = {ratio:.3f}, {elapsed:.1f} s")


@pytest.mark.slow
def test_8_end_to_end(report):
    start = time.perf_counter()
    cfg = make_scenario("variable", ScenarioConfig())
    trained = train_agents(cfg, 1000, episodes=200, horizon=200)
    names = ["mptcp", "tcp", "acmptc", "acmptc_drl"]
    rep = run_comparison(cfg, names, list(range(1, 21)), agents=trained.agents)
    m = rep.means
    thr, utl = "mean_throughput_mbps", "mean_utility"
    d_thr = rep.paired_diffs["acmptc_drl"][thr]
    d_utl = rep.paired_diffs["acmptc_drl"][utl]
    p_thr, p_utl = sign_test_pvalue(d_thr), sign_test_pvalue(d_utl)
    tcp_last = all(m["tcp"][thr] < m[n][thr] for n in names if n != "tcp")
    elapsed = time.perf_counter() - start
    ok = (m["acmptc_drl"][utl] >= m["mptcp"][utl] and m["acmptc_drl"][thr] >= m["mptcp"][thr]
          and np.mean(d_thr) > 0 and np.mean(d_utl) > 0 and p_thr < 0.05 and p_utl < 0.05
          and tcp_last and rep.checksums_equal and elapsed < 300)
    report(8, "acmptc_drl beats mptcp on the variable scenario", ok,
           f"throughput {m['acmptc_drl'][thr]:.2f} vs {m['mptcp'][thr]:.2f} Mbps (p={p_thr:.1e}), "
           f"utility {m['acmptc_drl'][utl]:.3f} vs {m['mptcp'][utl]:.3f} (p={p_utl:.1e}), "
           f"tcp last: {tcp_last}, {elapsed:.0f} s")


def test_9_determinism(report, tmp_path):
    for d in ("a", "b"):
        assert cli_main(["simulate", "--out", str(tmp_path / d), "--seed", "9"]) == 0
    a = (tmp_path / "a" / "metrics.csv").read_bytes()
    b = (tmp_path / "b" / "metrics.csv").read_bytes()
    report(9, "simulate is byte-reproducible", a == b and len(a) > 0, f"{len(a)} bytes")


def test_10_planted_violations(report):
    p = ControlParams()
    network = net_of([(100.0, 20, 0.0, 0.0, 40), (100.0, 30, 0.0, 0.0, 60), (100.0, 40, 0.0, 0.0, 80)])
    specs = [StreamSpec(j, 20.0) for j in range(3)]

    def st(alloc, lat=20.0, loss=0.0, qos=0.9):
        return StreamState(assigned_paths=tuple(sorted(alloc)), alloc_mbps=alloc, qos=qos,
                           latency_ms=lat, loss_rate=loss)

    streams = [
        st({0: 70.0, 1: 40.0}, lat=p.L_max_ms + 5.0),
        st({0: 33.0, 2: 10.0}, loss=p.rho_max + 0.01),
        st({1: 80.0}, qos=p.QoS_min - 0.1, lat=p.L_max_ms, loss=p.rho_max),
    ]
    planted = {("bandwidth", None, 0): 3.0, ("bandwidth", None, 1): 20.0,
               ("latency", 0, None): 5.0, ("loss", 1, None): 0.01, ("qos", 2, None): 0.1}
    found = {(v.kind, v.stream_id, v.path_id): v.excess for v in ctl.check_constraints(specs, streams, network, p)}
    ok = found.keys() == planted.keys() and all(math.isclose(found[k], planted[k], abs_tol=1e-9)
                                                for k in planted)
    report(10, "planted constraint violations", ok, f"found {sorted(found, key=str)}")
