"""Context-aware multipath control laws.

Path scoring and selection, threshold-triggered reallocation, the piecewise
congestion-window law with its rate-tracking correction, per-path bandwidth
allocation and sharing, feedback, experience/QoS scores and the stream
utility.  Everything here is a pure function of its arguments; the episode
engine in :mod:`acmptc.sim` owns the mutable per-stream state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .errors import ConfigError, DomainError
from .net_model import NetworkState, PathState

EXHAUSTIVE_MAX_PATHS = 12


@dataclass(frozen=True)
class StreamSpec:
    stream_id: int
    expected_rate_mbps: float
    weight_gamma_j: float = 0.1
    max_paths: int = 3

    def validate(self) -> None:
        if not (math.isfinite(self.expected_rate_mbps) and self.expected_rate_mbps > 0):
            raise ConfigError(f"stream {self.stream_id}: expected_rate_mbps must be > 0")
        if not (math.isfinite(self.weight_gamma_j) and self.weight_gamma_j >= 0):
            raise ConfigError(f"stream {self.stream_id}: weight_gamma_j must be finite and >= 0")
        if self.max_paths < 1:
            raise ConfigError(f"stream {self.stream_id}: max_paths must be >= 1")


@dataclass
class StreamState:
    assigned_paths: tuple[int, ...] = ()
    cwnd_mbit: dict[int, float] = field(default_factory=dict)
    actual_rate_mbps: float = 0.0
    rate_ewma_mbps: float = 0.0
    deviation: float = 0.0
    used_bw_mbps: dict[int, float] = field(default_factory=dict)
    alloc_mbps: dict[int, float] = field(default_factory=dict)
    experience: float = 0.0
    qos: float = 0.0
    latency_ms: float = 0.0
    loss_rate: float = 0.0


@dataclass(frozen=True)
class ControlParams:
    # path scoring weights (Mbps, ms, loss fraction)
    sel_alpha: float = 1.0
    sel_beta: float = 0.5
    sel_gamma: float = 500.0
    # congestion-window law
    cwnd_inc_alpha: float = 1.0
    cwnd_dec_beta: float = 0.5
    rate_delta: float = 0.5
    # utility / reward weights
    util_w_B: float = 0.7
    util_w_L: float = 0.2
    util_w_P: float = 0.1
    util_w_Q: float = 0.0
    # feedback
    eta: float = 0.1
    target_tau: float | tuple[float, ...] = 0.9
    # thresholds
    C_th: float = 0.8
    RTT_th_ms: float = 120.0
    L_th_ms: float = 100.0
    rho_th: float = 0.03
    rho_max: float = 0.05
    L_max_ms: float = 100.0
    QoS_min: float = 0.5
    deviation_ewma: float = 0.2

    def validate(self) -> None:
        weights = ("sel_alpha", "sel_beta", "sel_gamma", "cwnd_inc_alpha", "cwnd_dec_beta",
                   "rate_delta", "util_w_B", "util_w_L", "util_w_P", "util_w_Q", "eta")
        for name in weights:
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"control.{name} must be finite and >= 0, got {v}")
        for name in ("C_th", "rho_th", "rho_max"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"control.{name} must lie in [0, 1], got {v}")
        for name in ("RTT_th_ms", "L_th_ms", "L_max_ms"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"control.{name} must be > 0")
        if self.rho_max <= 0:
            raise ConfigError("control.rho_max must be > 0")
        if not 0.0 <= self.QoS_min <= 1.0:
            raise ConfigError("control.QoS_min must lie in [0, 1]")
        if not 0.0 < self.deviation_ewma <= 1.0:
            raise ConfigError("control.deviation_ewma must lie in (0, 1]")

    def tau(self, path_id: int) -> float:
        if isinstance(self.target_tau, (int, float)):
            return float(self.target_tau)
        return float(self.target_tau[path_id])


class FeedbackSignal(NamedTuple):
    value: float
    path_id: int


class PathChoice(NamedTuple):
    path_id: int
    fired: bool = False
    flag: str | None = None


# -- path selection ---------------------------------------------------------

def score_path(path: PathState, p: ControlParams) -> float:
    return p.sel_alpha * path.bandwidth_mbps - p.sel_beta * path.latency_ms - p.sel_gamma * path.loss_rate


def best_subset(scores: Sequence[float], max_paths: int) -> tuple[int, ...]:
    """Index set of at most ``max_paths`` entries with the largest score sum.

    Ties go to the lexicographically smallest sorted index tuple. The result
    is never empty.
    """
    n = len(scores)
    k = max(1, min(max_paths, n))
    if n <= EXHAUSTIVE_MAX_PATHS:
        best: tuple[int, ...] | None = None
        best_sum = -math.inf
        for mask in range(1, 1 << n):
            if mask.bit_count() > k:
                continue
            ids = tuple(i for i in range(n) if mask >> i & 1)
            s = math.fsum(scores[i] for i in ids)
            if s > best_sum or (s == best_sum and ids < best):
                best, best_sum = ids, s
        return best
    order = sorted(range(n), key=lambda i: (-scores[i], i))
    picked = [i for i in order[:k] if scores[i] > 0] or [order[0]]
    return tuple(sorted(picked))


def select_paths(stream: StreamSpec, network: NetworkState, p: ControlParams) -> tuple[int, ...]:
    scores = [score_path(path, p) for path in network.paths]
    return best_subset(scores, stream.max_paths)


# -- reallocation rules -----------------------------------------------------

def _argmin_alternative(network: NetworkState, current: int, key) -> int | None:
    best = None
    for path in network.paths:
        if path.path_id == current:
            continue
        if best is None or key(path) < key(network.paths[best]):
            best = path.path_id
    return best


def _reallocate(network: NetworkState, current: int, fired: bool, key) -> PathChoice:
    if not 0 <= current < network.n_paths:
        raise DomainError(f"unknown current path {current}")
    if not fired:
        return PathChoice(current)
    alt = _argmin_alternative(network, current, key)
    if alt is None:
        return PathChoice(current, True, "no_alternative")
    return PathChoice(alt, True)


def reallocate_on_congestion(current: int, network: NetworkState, p: ControlParams) -> PathChoice:
    fired = network.paths[current].congestion > p.C_th if 0 <= current < network.n_paths else False
    return _reallocate(network, current, fired, lambda q: q.congestion)


def reallocate_on_delay(current: int, network: NetworkState, p: ControlParams) -> PathChoice:
    fired = False
    if 0 <= current < network.n_paths:
        cur = network.paths[current]
        fired = cur.rtt_ms > p.RTT_th_ms or cur.latency_ms > p.L_th_ms
    return _reallocate(network, current, fired, lambda q: (q.rtt_ms, q.latency_ms))


def reallocate_on_loss(current: int, network: NetworkState, p: ControlParams) -> PathChoice:
    fired = network.paths[current].loss_rate > p.rho_th if 0 <= current < network.n_paths else False
    return _reallocate(network, current, fired, lambda q: q.loss_rate)


def reallocate_bandwidth(network: NetworkState, usage: Sequence[float],
                         candidates: Sequence[int] | None = None) -> PathChoice:
    """Path with the most headroom (capacity minus usage); flags saturation."""
    ids = list(range(network.n_paths)) if candidates is None else list(candidates)
    if not ids:
        raise DomainError("no candidate paths")
    head = {i: network.paths[i].capacity_mbps - usage[i] for i in ids}
    best = ids[0]
    for i in ids[1:]:
        if head[i] > head[best] or (head[i] == head[best] and i < best):
            best = i
    return PathChoice(best, flag="saturated" if head[best] <= 0 else None)


# -- congestion window ------------------------------------------------------

def update_cwnd(cwnd: float, path_loss: float, deviation_sum: float, p: ControlParams) -> float:
    if path_loss < p.rho_th:
        new = cwnd + p.cwnd_inc_alpha * (1.0 - path_loss - deviation_sum)
    else:
        zeta = path_loss + deviation_sum
        new = max(cwnd - p.cwnd_dec_beta * cwnd * zeta, 1.0)
    return max(new, 1.0)


def adjust_cwnd_rate(cwnd: float, actual_rate: float, expected_rate: float, p: ControlParams) -> float:
    if expected_rate == 0:
        raise DomainError("expected rate must be non-zero")
    return max(cwnd + p.rate_delta * (actual_rate / expected_rate - 1.0), 1.0)


def traffic_deviation(actual: float, ewma: float) -> float:
    return (actual - ewma) / max(ewma, 1.0)


# -- bandwidth --------------------------------------------------------------

def allocate_bandwidth(cwnd_mbit: float, rtt_s: float, path_capacity: float, others_usage: float) -> float:
    if rtt_s == 0:
        raise DomainError("RTT must be non-zero")
    if others_usage < 0:
        raise DomainError("usage must be >= 0")
    return max(0.0, min(cwnd_mbit / rtt_s, path_capacity - others_usage))


def share_path(demands: Sequence[float], headroom: float) -> list[float]:
    """Split ``headroom`` over streams in proportion to demand, capped at demand.

    A proportional share only reaches its cap when the headroom covers the
    total demand, so the split is either every demand in full or a single
    proportional pass; no redistribution round is ever needed.
    """
    left = max(0.0, float(headroom))
    want = [max(0.0, float(d)) for d in demands]
    total = math.fsum(want)
    if total <= left:
        return want
    return [d * left / total for d in want]


# -- feedback, scores, utility ---------------------------------------------

def feedback_metric(eta: float, target: float, experience: float) -> float:
    return eta * (target - experience)


def _frac(x: float, cap: float) -> float:
    return min(max(x / cap, 0.0), 1.0)


def experience_score(delivered_rate: float, expected_rate: float, latency_ms: float,
                     loss_rate: float, p: ControlParams) -> float:
    if expected_rate == 0:
        raise DomainError("expected rate must be non-zero")
    rate = min(max(delivered_rate / expected_rate, 0.0), 1.0)
    return rate * math.sqrt(1.0 - _frac(latency_ms, p.L_max_ms)) * math.sqrt(1.0 - _frac(loss_rate, p.rho_max))


def qos_score(rate_satisfaction: float, latency_ms: float, loss_rate: float, p: ControlParams) -> float:
    sat = min(max(rate_satisfaction, 0.0), 1.0)
    return 0.5 * sat + 0.3 * (1.0 - _frac(latency_ms, p.L_max_ms)) + 0.2 * (1.0 - _frac(loss_rate, p.rho_max))


def normalize_metrics(delivered: float, expected: float, latency_ms: float, loss_rate: float,
                      p: ControlParams) -> tuple[float, float, float]:
    b = min(max(delivered / expected, 0.0), 1.0)
    return b, _frac(latency_ms, p.L_max_ms), _frac(loss_rate, p.rho_max)


def utility(bandwidth_norm: float, latency_norm: float, loss_norm: float, qos: float,
            p: ControlParams) -> float:
    return (p.util_w_B * bandwidth_norm - p.util_w_L * latency_norm
            - p.util_w_P * loss_norm + p.util_w_Q * qos)


# -- constraints ------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str  # bandwidth | latency | loss | qos | selection
    stream_id: int | None
    path_id: int | None
    excess: float

    def __str__(self):
        where = []
        if self.stream_id is not None:
            where.append(f"stream {self.stream_id}")
        if self.path_id is not None:
            where.append(f"path {self.path_id}")
        return f"{self.kind} violation ({', '.join(where)}): excess {self.excess:.6g}"


def check_constraints(specs: Sequence[StreamSpec], streams: Sequence[StreamState],
                      network: NetworkState, p: ControlParams,
                      check_selection: bool = False) -> list[Violation]:
    """List every violated per-path and per-stream constraint.

    Checks the per-path capacity cap on allocated bandwidth, the stream
    latency/loss ceilings, the QoS floor (inclusive), and optionally that each
    stream's assigned set equals the score-maximising selection.
    """
    out: list[Violation] = []
    for path in network.paths:
        used = math.fsum(s.alloc_mbps.get(path.path_id, 0.0) for s in streams)
        if used > path.capacity_mbps:
            out.append(Violation("bandwidth", None, path.path_id, used - path.capacity_mbps))
    for spec, s in zip(specs, streams):
        if s.latency_ms > p.L_max_ms:
            out.append(Violation("latency", spec.stream_id, None, s.latency_ms - p.L_max_ms))
        if s.loss_rate > p.rho_max:
            out.append(Violation("loss", spec.stream_id, None, s.loss_rate - p.rho_max))
        if s.qos < p.QoS_min:
            out.append(Violation("qos", spec.stream_id, None, p.QoS_min - s.qos))
        if check_selection:
            want = select_paths(spec, network, p)
            if tuple(sorted(s.assigned_paths)) != want:
                out.append(Violation("selection", spec.stream_id, None,
                                     float(len(set(want) ^ set(s.assigned_paths)))))
    return out
