"""Episode engine: network evolution, schedulers, measurement and comparisons."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import control as ctl
from .control import ControlParams, StreamSpec, StreamState
from .drl.agent import (ActionSpec, Agent, AgentConfig, TrainResult, encode_observation,
                        reward as drl_reward, train)
from .errors import ConfigError, TraceParseError
from .mptcp_core import baseline_mptcp_schedule, baseline_tcp_schedule, tcp_pick_path
from .net_model import (DynamicsConfig, csv_rows, NetworkState, TraceRecord, apply_load, apply_records,
                        background_draw, group_by_step, init_network, load_trace, step_dynamics,
                        trace_step)

SCHEDULERS = ("tcp", "mptcp", "acmptc", "acmptc_drl")
SCENARIO_KINDS = ("steady", "variable", "extreme")
EPS = 1e-9


def default_streams() -> tuple[StreamSpec, ...]:
    return (StreamSpec(0, 15.0), StreamSpec(1, 25.0), StreamSpec(2, 35.0))


@dataclass(frozen=True)
class ScenarioConfig:
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    streams: tuple[StreamSpec, ...] = field(default_factory=default_streams)
    control: ControlParams = field(default_factory=ControlParams)
    agent: AgentConfig = field(default_factory=AgentConfig)
    horizon: int = 1000
    scheduler: str = "acmptc"
    trace_path: str | None = None
    stream_trace_path: str | None = None
    scenario_kind: str = "variable"

    def validate(self) -> None:
        self.dynamics.validate()
        self.control.validate()
        self.agent.validate()
        if self.horizon < 1:
            raise ConfigError("run.horizon must be >= 1")
        if not self.streams:
            raise ConfigError("at least one stream is required")
        ids = [s.stream_id for s in self.streams]
        if ids != list(range(len(ids))):
            raise ConfigError(f"stream ids must be 0..k-1 in order, got {ids}")
        for s in self.streams:
            s.validate()
        if self.scheduler not in SCHEDULERS:
            raise ConfigError(f"run.scheduler must be one of {', '.join(SCHEDULERS)}")
        if self.scenario_kind not in SCENARIO_KINDS:
            raise ConfigError(f"run.scenario_kind must be one of {', '.join(SCENARIO_KINDS)}")


@dataclass(frozen=True)
class MetricsRecord:
    t: int
    stream_id: int
    delivered_mbps: float
    latency_ms: float
    loss_rate: float
    qos: float
    utility: float
    assigned_paths: tuple[int, ...]


@dataclass
class EpisodeResult:
    records: list[MetricsRecord]
    summary: dict
    violations: int
    seed: int
    scheduler: str
    reallocations: int = 0
    exogenous_checksum: str = ""
    max_path_overuse: float = 0.0
    min_cwnd: float = math.inf


def make_scenario(kind: str, base: ScenarioConfig) -> ScenarioConfig:
    """Derive the steady / variable / extreme variant of ``base``."""
    d = base.dynamics
    if kind == "steady":
        dyn = replace(d, walk_step_fraction=0.0)
    elif kind == "variable":
        dyn = replace(d, walk_step_fraction=0.1)
    elif kind == "extreme":
        lo, hi = d.bandwidth_range
        dyn = replace(d, walk_step_fraction=0.3,
                      loss_range=(d.loss_range[0], max(d.loss_range[1], 0.05)),
                      bandwidth_range=(0.1 * lo, hi))
    else:
        raise ConfigError(f"unknown scenario kind {kind!r}")
    return replace(base, dynamics=dyn, scenario_kind=kind)


# -- schedulers -------------------------------------------------------------

@dataclass
class Decision:
    offered: list[list[float]]  # [stream][path]
    alloc: list[list[float]]
    assigned: list[tuple[int, ...]]


class TcpScheduler:
    name = "tcp"
    enforce_capacity = False

    def __init__(self):
        self.pinned: list[int] | None = None

    def decide(self, sim: "Simulator", net: NetworkState, demands: Sequence[float],
               actions=None) -> Decision:
        if self.pinned is None:
            self.pinned = [tcp_pick_path(net)] * len(demands)
        offered = baseline_tcp_schedule(demands, net, self.pinned)
        return Decision(offered, offered, [(p,) for p in self.pinned])


class MptcpScheduler:
    name = "mptcp"
    enforce_capacity = False

    def decide(self, sim, net, demands, actions=None) -> Decision:
        offered = baseline_mptcp_schedule(demands, net)
        assigned = [tuple(i for i, x in enumerate(row) if x > 0) for row in offered]
        return Decision(offered, offered, assigned)


class AcmptcScheduler:
    """Rule-based context-aware control.

    Per step and stream, in stream-id order: initial selection on entry, then
    congestion -> delay -> loss reallocation of each assigned path, the
    piecewise window law followed by the rate-tracking correction, demand
    split over assigned paths, per-path sharing, then a top-up pass that
    hands leftover headroom to streams still short of demand, adding the path
    with the most headroom when the assigned ones are exhausted.
    """

    name = "acmptc"
    enforce_capacity = True

    def __init__(self):
        self.reallocations = 0

    def _usable(self, sim: "Simulator", net: NetworkState) -> list[float]:
        # cross traffic estimated from last step's measured congestion minus our own load
        out = []
        for p in net.paths:
            own = sum(row[p.path_id] for row in sim.last_offered)
            others = max(0.0, p.congestion * p.capacity_mbps - own)
            out.append(max(0.0, min(p.bandwidth_mbps, p.capacity_mbps) - others))
        return out

    @staticmethod
    def _rate(st: StreamState, pid: int, net: NetworkState) -> float:
        return st.cwnd_mbit[pid] / (net.paths[pid].rtt_ms / 1000.0)

    def _reallocate(self, current: int, net: NetworkState, p: ControlParams) -> int:
        for rule in (ctl.reallocate_on_congestion, ctl.reallocate_on_delay, ctl.reallocate_on_loss):
            ch = rule(current, net, p)
            if ch.fired and ch.path_id != current:
                self.reallocations += 1
                current = ch.path_id
        return current

    def _force_primary(self, assigned: list[int], primary: int, spec: StreamSpec,
                       scores: list[float]) -> list[int]:
        if primary in assigned:
            return assigned
        if len(assigned) >= spec.max_paths:
            worst = min(assigned, key=lambda i: (scores[i], -i))
            assigned = [i for i in assigned if i != worst]
        return assigned + [primary]

    def decide(self, sim: "Simulator", net: NetworkState, demands: Sequence[float],
               actions: Sequence[ActionSpec] | None = None) -> Decision:
        p = sim.cfg.control
        n = net.n_paths
        k = len(demands)
        scores = [ctl.score_path(path, p) for path in net.paths]
        usable = self._usable(sim, net)
        first = net.t == sim.start_t

        # sum of gamma_j * delta_j over streams that used each path last step
        dev_sum = [0.0] * n
        for spec, st in zip(sim.specs, sim.states):
            for i in st.assigned_paths:
                dev_sum[i] += spec.weight_gamma_j * st.deviation

        requests = [[0.0] * n for _ in range(k)]
        caps: list[list[float]] = [[]] * k
        sets: list[list[int]] = []
        for j, (spec, st, demand) in enumerate(zip(sim.specs, sim.states, demands)):
            act = actions[j] if actions is not None else None
            if first or not st.assigned_paths:
                assigned = list(ctl.select_paths(spec, net, p))
            else:
                assigned = []
                for pid in st.assigned_paths:
                    new = self._reallocate(pid, net, p)
                    if new not in assigned:
                        assigned.append(new)
            if act is not None:
                assigned = self._force_primary(assigned, act.primary_path, spec, scores)

            share0 = demand / max(len(assigned), 1)
            for pid in assigned:
                if pid not in st.cwnd_mbit:
                    st.cwnd_mbit[pid] = max(1.0, share0 * net.paths[pid].rtt_ms / 1000.0)
            if act is not None and act.cwnd_factor != 1.0:
                for pid in assigned:
                    st.cwnd_mbit[pid] = max(1.0, st.cwnd_mbit[pid] * act.cwnd_factor)
            if not first:
                for pid in assigned:
                    c = ctl.update_cwnd(st.cwnd_mbit[pid], net.paths[pid].loss_rate, dev_sum[pid], p)
                    st.cwnd_mbit[pid] = ctl.adjust_cwnd_rate(c, st.actual_rate_mbps,
                                                             spec.expected_rate_mbps, p)

            bw_factor = act.bw_factor if act is not None else 1.0
            caps[j] = [min(net.paths[i].capacity_mbps, usable[i] * bw_factor) for i in range(n)]
            remaining = demand
            for pid in sorted(assigned, key=lambda i: (-scores[i], i)):
                r = min(self._rate(st, pid, net), remaining, caps[j][pid])
                requests[j][pid] = max(r, 0.0)
                remaining -= requests[j][pid]
            sets.append(assigned)

        # share each path among the streams requesting it (Eq 9 with usage accounting)
        alloc = [[0.0] * n for _ in range(k)]
        used = [0.0] * n
        for i in range(n):
            reqs = [requests[j][i] for j in range(k)]
            if not any(reqs):
                continue
            shares = ctl.share_path(reqs, usable[i])
            rtt_s = net.paths[i].rtt_ms / 1000.0
            for j in range(k):
                if reqs[j] > 0:
                    b = ctl.allocate_bandwidth(sim.states[j].cwnd_mbit[i], rtt_s, usable[i], used[i])
                    alloc[j][i] = min(b, shares[j])
                    used[i] += alloc[j][i]

        # top up streams still short of demand from leftover headroom, adding
        # the path with the most headroom while the stream has room for more
        for j, (spec, st, demand) in enumerate(zip(sim.specs, sim.states, demands)):
            assigned = sets[j]
            short = demand - sum(alloc[j])
            tried: set[int] = set()
            while short > EPS:
                leftover = [max(0.0, min(caps[j][i], usable[i]) - used[i]) for i in range(n)]
                cands = [i for i in sorted(assigned, key=lambda i: (-scores[i], i))
                         if i not in tried and leftover[i] > EPS]
                if cands:
                    pid = cands[0]
                else:
                    free = [i for i in range(n) if i not in assigned]
                    if not free or len(assigned) >= spec.max_paths:
                        break
                    taken = [net.paths[i].capacity_mbps - leftover[i] for i in range(n)]
                    ch = ctl.reallocate_bandwidth(net, taken, free)
                    if ch.flag == "saturated" or leftover[ch.path_id] <= EPS:
                        break
                    pid = ch.path_id
                    assigned.append(pid)
                    if pid not in st.cwnd_mbit:
                        st.cwnd_mbit[pid] = max(1.0, short * net.paths[pid].rtt_ms / 1000.0)
                tried.add(pid)
                rtt_s = net.paths[pid].rtt_ms / 1000.0
                others = used[pid] - alloc[j][pid]
                b = ctl.allocate_bandwidth(st.cwnd_mbit[pid], rtt_s, min(caps[j][pid], usable[pid]), others)
                extra = max(0.0, min(b - alloc[j][pid], short))
                alloc[j][pid] += extra
                used[pid] += extra
                short -= extra

        assigned_out = []
        for j, assigned in enumerate(sets):
            keep = [i for i in assigned if alloc[j][i] > 0] or assigned[:1]
            assigned_out.append(tuple(sorted(keep)))
        return Decision(alloc, alloc, assigned_out)


class DrlScheduler(AcmptcScheduler):
    name = "acmptc_drl"


def make_scheduler(name: str):
    return {"tcp": TcpScheduler, "mptcp": MptcpScheduler, "acmptc": AcmptcScheduler,
            "acmptc_drl": DrlScheduler}[name]()


# -- simulator --------------------------------------------------------------

def _read_stream_trace(path: str) -> dict[tuple[int, int], float]:
    out = {}
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read stream trace {path}: {exc.strerror}") from None
    with fh:
        rows = csv_rows(fh)
        _, header = next(rows, (1, None))
        if header is None or [h.strip() for h in header] != ["t", "stream_id", "bitrate_mbps"]:
            raise TraceParseError(f"{path}: expected header t,stream_id,bitrate_mbps")
        for lineno, row in rows:
            try:
                t, sid, rate = int(row[0]), int(row[1]), float(row[2])
            except (ValueError, IndexError):
                raise TraceParseError(f"{path}: line {lineno}: malformed row") from None
            if rate < 0 or not math.isfinite(rate):
                raise TraceParseError(f"{path}: line {lineno}: bitrate must be finite and >= 0")
            out[(t, sid)] = rate
    return out


class Simulator:
    """One episode of the network with a chosen scheduler.

    Exogenous randomness (initial paths, random walk, background traffic)
    comes from its own generator so every scheduler sees the same draws for
    the same seed.
    """

    def __init__(self, cfg: ScenarioConfig, seed: int, scheduler: str | None = None,
                 agents: Sequence[Agent] | None = None, greedy: bool = True,
                 epsilon: float = 0.0, keep_records: bool = True,
                 trace: list[TraceRecord] | None = None,
                 stream_trace: dict | None = None):
        cfg.validate()
        self.cfg = cfg
        self.seed = int(seed)
        self.scheduler_name = scheduler or cfg.scheduler
        if self.scheduler_name not in SCHEDULERS:
            raise ConfigError(f"unknown scheduler {self.scheduler_name!r}")
        self.agents = list(agents) if agents is not None else None
        if self.scheduler_name == "acmptc_drl" and self.agents is not None \
                and len(self.agents) != len(cfg.streams):
            raise ConfigError("need one agent per stream")
        self.greedy = greedy
        self.epsilon = epsilon
        self.keep_records = keep_records
        if trace is None and cfg.trace_path:
            with open(cfg.trace_path, "rb") as fh:
                trace = load_trace(fh)
        self.trace = group_by_step(trace) if trace else None
        if stream_trace is None and cfg.stream_trace_path:
            stream_trace = _read_stream_trace(cfg.stream_trace_path)
        self.stream_trace = stream_trace
        self.specs = list(cfg.streams)
        self.reset()

    # exogenous draws ---------------------------------------------------
    def _digest(self, arr) -> None:
        self._hash.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())

    def _draw_background(self) -> None:
        self.background = background_draw(self.cfg.dynamics, self.net, self.dyn_rng)
        self._digest(self.background)

    def reset(self) -> None:
        dyn_ss, pol_ss = np.random.SeedSequence(self.seed).spawn(2)
        self.dyn_rng = np.random.default_rng(dyn_ss)
        self.policy_rng = np.random.default_rng(pol_ss)
        self._hash = hashlib.sha256()
        net = init_network(self.cfg.dynamics, self.dyn_rng)
        self._digest([(p.bandwidth_mbps, p.latency_ms, p.loss_rate) for p in net.paths])
        if self.trace and 0 in self.trace:
            net = apply_records(net, self.trace[0])
        self.net = net
        self.start_t = net.t
        self._draw_background()
        self.scheduler = make_scheduler(self.scheduler_name)
        self.states = [StreamState(rate_ewma_mbps=s.expected_rate_mbps) for s in self.specs]
        self.feedback = [0.0] * len(self.specs)
        self.last_offered = [[0.0] * self.net.n_paths for _ in self.specs]
        self._last_demand = [s.expected_rate_mbps for s in self.specs]
        self.records: list[MetricsRecord] = []
        self.violations = 0
        self.steps = 0
        self.max_overuse = 0.0
        self.min_cwnd = math.inf

    def _evolve(self) -> None:
        if self.trace is not None:
            self.net = trace_step(self.net, self.trace.get(self.net.t + 1, []))
        else:
            walk = self.dyn_rng.uniform(-1.0, 1.0, size=(self.net.n_paths, 3))
            self._digest(walk)
            self.net = step_dynamics(self.net, self.cfg.dynamics, _Replay(walk))
        self._draw_background()

    def demands(self) -> list[float]:
        out = []
        for j, s in enumerate(self.specs):
            d = s.expected_rate_mbps
            if self.stream_trace is not None:
                d = self.stream_trace.get((self.net.t, s.stream_id), self._last_demand[j])
            out.append(d)
        self._last_demand = out
        return out

    def observe(self) -> list[np.ndarray]:
        return [encode_observation(self.net, self.feedback[j], self.states[j].experience)
                for j in range(len(self.specs))]

    def policy_actions(self) -> list[ActionSpec] | None:
        if self.scheduler_name != "acmptc_drl" or self.agents is None:
            return None
        obs = self.observe()
        if self.greedy:
            return [ag.greedy(o) for ag, o in zip(self.agents, obs)]
        return [ag.act(o, self.epsilon, self.policy_rng) for ag, o in zip(self.agents, obs)]

    def step(self, actions: Sequence[ActionSpec] | None = None) -> list[float]:
        """Run one control step; returns per-stream rewards (utilities)."""
        cfg, p = self.cfg, self.cfg.control
        net = self.net
        n = net.n_paths
        demands = self.demands()
        if actions is None:
            actions = self.policy_actions()
        dec = self.scheduler.decide(self, net, demands, actions)

        path_alloc = [sum(dec.alloc[j][i] for j in range(len(demands))) for i in range(n)]
        for i, used in enumerate(path_alloc):
            over = used - net.paths[i].capacity_mbps
            self.max_overuse = max(self.max_overuse, over)
            if over > 0 and self.scheduler.enforce_capacity:
                raise AssertionError(
                    f"t={net.t}: allocation {used} exceeds capacity on path {i}")
        offered_path = [sum(dec.offered[j][i] for j in range(len(demands))) + self.background[i]
                        for i in range(n)]
        loaded = apply_load(net, offered_path)

        rewards = []
        for j, (spec, st) in enumerate(zip(self.specs, self.states)):
            offered_j = 0.0
            delivered = 0.0
            lat_acc = 0.0
            used = {}
            for i in range(n):
                o = dec.offered[j][i]
                if o <= 0:
                    continue
                lp = loaded.paths[i]
                q = lp.delivered_mbps / lp.offered_mbps if lp.offered_mbps > 0 else 0.0
                d = o * q
                offered_j += o
                delivered += d
                lat_acc += d * lp.latency_ms
                used[i] = d
            assigned = dec.assigned[j]
            if delivered > 0:
                latency = lat_acc / delivered
            else:
                latency = sum(loaded.paths[i].latency_ms for i in assigned) / max(len(assigned), 1)
            loss = 1.0 - delivered / offered_j if offered_j > 0 else 0.0
            loss = min(max(loss, 0.0), 1.0)
            expected = demands[j] if demands[j] > 0 else spec.expected_rate_mbps
            ux = ctl.experience_score(delivered, expected, latency, loss, p)
            qos = ctl.qos_score(delivered / expected, latency, loss, p)
            b, l, r = ctl.normalize_metrics(delivered, expected, latency, loss, p)
            u = drl_reward(b, l, r, qos, p)
            tau = sum(p.tau(i) for i in assigned) / max(len(assigned), 1)
            self.feedback[j] = ctl.feedback_metric(p.eta, tau, ux)

            st.deviation = ctl.traffic_deviation(delivered, st.rate_ewma_mbps)
            st.rate_ewma_mbps += p.deviation_ewma * (delivered - st.rate_ewma_mbps)
            st.actual_rate_mbps = delivered
            st.assigned_paths = assigned
            st.used_bw_mbps = used
            st.alloc_mbps = {i: dec.alloc[j][i] for i in range(n) if dec.alloc[j][i] > 0}
            st.experience, st.qos, st.latency_ms, st.loss_rate = ux, qos, latency, loss
            for i in assigned:
                if i in st.cwnd_mbit:
                    self.min_cwnd = min(self.min_cwnd, st.cwnd_mbit[i])
            rewards.append(u)
            if self.keep_records:
                self.records.append(MetricsRecord(net.t, spec.stream_id, delivered, latency,
                                                  loss, qos, u, assigned))

        self.violations += len(ctl.check_constraints(self.specs, self.states, loaded, p))
        self.last_offered = dec.offered
        self.net = loaded
        self.steps += 1
        self._evolve()
        return rewards

    @property
    def reallocations(self) -> int:
        return getattr(self.scheduler, "reallocations", 0)

    def exogenous_checksum(self) -> str:
        return self._hash.hexdigest()


class _Replay:
    """Feeds pre-drawn walk increments to :func:`step_dynamics`."""

    def __init__(self, draws):
        self.draws = draws

    def uniform(self, low, high, size):
        return self.draws


# -- episodes ---------------------------------------------------------------

def run_episode(cfg: ScenarioConfig, seed: int, scheduler: str | None = None,
                agents: Sequence[Agent] | None = None, **kw) -> EpisodeResult:
    sim = Simulator(cfg, seed, scheduler=scheduler, agents=agents, **kw)
    if sim.scheduler_name == "acmptc_drl" and agents is None:
        raise ConfigError("acmptc_drl needs trained agents (see train_agents)")
    for _ in range(cfg.horizon):
        sim.step()
    return EpisodeResult(
        records=sim.records,
        summary=summarize(sim.records),
        violations=sim.violations,
        seed=int(seed),
        scheduler=sim.scheduler_name,
        reallocations=sim.reallocations,
        exogenous_checksum=sim.exogenous_checksum(),
        max_path_overuse=sim.max_overuse,
        min_cwnd=sim.min_cwnd,
    )


class SimEnv:
    """Training environment: each episode is a fresh network draw."""

    def __init__(self, cfg: ScenarioConfig, seed: int):
        self.cfg = cfg
        self.seed = int(seed)
        self.n_agents = len(cfg.streams)
        self.sim: Simulator | None = None

    def reset(self, episode: int) -> list[np.ndarray]:
        ep_seed = int(np.random.SeedSequence([self.seed, episode, 7]).generate_state(1)[0])
        self.sim = Simulator(self.cfg, ep_seed, scheduler="acmptc_drl", keep_records=False)
        return self.sim.observe()

    def step(self, actions):
        rewards = self.sim.step(actions)
        return self.sim.observe(), rewards, False


def train_agents(cfg: ScenarioConfig, seed: int, episodes: int | None = None,
                 horizon: int | None = None, progress=None) -> TrainResult:
    acfg = cfg.agent if episodes is None else replace(cfg.agent, episodes=episodes)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1]))
    n_paths = cfg.dynamics.n_paths
    agents = [Agent.create(s.stream_id, n_paths, rng, acfg.hidden) for s in cfg.streams]
    env = SimEnv(cfg, seed)
    return train(env, agents, acfg, rng, horizon=horizon or acfg.horizon, progress=progress)


# -- summaries and comparisons ---------------------------------------------

def p95_nearest_rank(values: Sequence[float]) -> float:
    xs = sorted(values)
    rank = max(1, math.ceil(0.95 * len(xs)))
    return xs[rank - 1]


def _stats(recs: Sequence[MetricsRecord]) -> dict:
    d = [r.delivered_mbps for r in recs]
    lat = [r.latency_ms for r in recs]
    return {
        "mean_throughput_mbps": math.fsum(d) / len(d),
        "min_throughput_mbps": float(min(d)),
        "max_throughput_mbps": float(max(d)),
        "cumulative_throughput": math.fsum(d),
        "mean_latency_ms": math.fsum(lat) / len(lat),
        "p95_latency_ms": p95_nearest_rank(lat),
        "mean_loss": math.fsum(r.loss_rate for r in recs) / len(recs),
        "mean_qos": math.fsum(r.qos for r in recs) / len(recs),
        "mean_utility": math.fsum(r.utility for r in recs) / len(recs),
    }


def summarize(records: Sequence[MetricsRecord]) -> dict:
    if not records:
        raise ValueError("cannot summarize an empty record list")
    out = _stats(records)
    by_stream: dict[int, list[MetricsRecord]] = {}
    for r in records:
        by_stream.setdefault(r.stream_id, []).append(r)
    out["per_stream"] = {sid: _stats(rs) for sid, rs in sorted(by_stream.items())}
    return out


def sign_test_pvalue(diffs: Sequence[float]) -> float:
    """One-sided exact sign test p-value for 'differences tend to be positive' (zeros dropped)."""
    pos = sum(1 for d in diffs if d > 0)
    n = sum(1 for d in diffs if d != 0)
    if n == 0:
        return 1.0
    return math.fsum(math.comb(n, k) for k in range(pos, n + 1)) / 2 ** n


@dataclass
class ComparisonReport:
    schedulers: list[str]
    seeds: list[int]
    results: dict[str, list[EpisodeResult]]
    means: dict[str, dict[str, float]]
    paired_diffs: dict[str, dict[str, list[float]]]
    checksums_equal: bool

    def summary_of(self, scheduler: str) -> dict[str, float]:
        return self.means[scheduler]


METRIC_KEYS = ("mean_throughput_mbps", "p95_latency_ms", "mean_loss", "mean_qos",
               "mean_utility", "cumulative_throughput")


def run_comparison(cfg: ScenarioConfig, schedulers: Sequence[str], seeds: Sequence[int],
                   agents: Sequence[Agent] | None = None, train_horizon: int | None = None
                   ) -> ComparisonReport:
    """Run every (scheduler, seed) cell on identical exogenous network draws.

    Paired differences are taken against the first scheduler in the list.
    Without ``agents``, each acmptc_drl cell trains its own agents from its seed.
    """
    if not schedulers or not seeds:
        raise ConfigError("need at least one scheduler and one seed")
    results: dict[str, list[EpisodeResult]] = {}
    for name in dict.fromkeys(schedulers):
        cells = []
        for seed in seeds:
            ags = agents
            if name == "acmptc_drl" and ags is None:
                ags = train_agents(cfg, seed, horizon=train_horizon).agents
            cells.append(run_episode(cfg, seed, scheduler=name,
                                     agents=ags if name == "acmptc_drl" else None))
        results[name] = cells
    means = {}
    for name, cells in results.items():
        means[name] = {k: math.fsum(c.summary[k] for c in cells) / len(cells) for k in METRIC_KEYS}
        means[name]["violations"] = math.fsum(c.violations for c in cells) / len(cells)
    ref = schedulers[0]
    diffs = {name: {k: [c.summary[k] - r.summary[k] for c, r in zip(cells, results[ref])]
                    for k in METRIC_KEYS}
             for name, cells in results.items()}
    sums = {tuple(c.exogenous_checksum for c in cells) for cells in results.values()}
    return ComparisonReport(list(schedulers), [int(s) for s in seeds], results, means, diffs,
                            len(sums) == 1)
